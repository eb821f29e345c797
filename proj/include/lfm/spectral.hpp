#pragma once

#include "lfm/common.hpp"

#include <cstdint>

namespace lfm {

/// The k_e smallest eigenpairs of a graph Laplacian, ascending.
struct SpectralBasis {
  Vec eigenvalues;   // ascending
  Mat eigenvectors;  // n x k_e, orthonormal columns
  Vec residuals;     // ||L phi - lambda phi|| per pair

  Index n() const { return eigenvectors.rows(); }
  Index size() const { return eigenvectors.cols(); }

  /// First k pairs.
  SpectralBasis truncated(Index k) const;
  /// Checks shape, ordering and finiteness (not orthonormality).
  void validate() const;
};

struct EigenOptions {
  double tol = 1e-8;
  /// Matrix-vector product budget; 0 means 50 * k_e.
  Index max_matvecs = 0;
  /// Krylov subspace cap; 0 picks max(2 k_e + 20, k_e + 40).
  Index subspace = 0;
  std::uint64_t seed = 0x5eed5eedULL;
};

/// Thick-restart Lanczos with full reorthogonalization on 2I - L.
/// Each eigenvector is signed so its largest-magnitude entry is positive.
/// Throws NumericalError (with the achieved residual) when the budget runs out.
SpectralBasis eigenbasis(const SpMat& laplacian, Index k_e, const EigenOptions& opts = {});
inline SpectralBasis eigenbasis(const SpMat& laplacian, Index k_e, double tol) {
  EigenOptions o;
  o.tol = tol;
  return eigenbasis(laplacian, k_e, o);
}

/// Spectral coefficients Phi^T f (f may hold several columns).
Mat project(const SpectralBasis& basis, const Mat& f);
/// Node functions Phi a.
Mat reconstruct(const SpectralBasis& basis, const Mat& a);

/// Flips v so that its largest-magnitude entry (lowest index on ties) is positive.
void canonicalize_sign(Eigen::Ref<Vec> v);

}  // namespace lfm
