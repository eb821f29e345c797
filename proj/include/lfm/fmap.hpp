#pragma once

#include "lfm/common.hpp"
#include "lfm/correspondence.hpp"
#include "lfm/descriptors.hpp"
#include "lfm/spectral.hpp"

#include <string>
#include <vector>

namespace lfm {

struct SolverConfig {
  double alpha = 1e-3;  // Laplacian commutativity weight
  double beta = 1.0;    // descriptor commutativity weight
  int max_iter = 5000;  // CG iterations
  double tol = 1e-10;   // CG stop: ||residual|| <= tol * ||rhs||
  Index dense_limit = 4096;  // k_x k_y at or below this uses the dense direct solve

  void validate() const;
};

/// Term-wise objective value. `total` is their sum.
struct ObjectiveTerms {
  double data = 0.0;
  double laplacian = 0.0;   // already multiplied by alpha
  double descriptor = 0.0;  // already multiplied by beta
  double total = 0.0;
};

struct SolverInfo {
  std::string method;  // "dense", "cg" or "min_norm"
  int iterations = 0;
  double gradient_norm = 0.0;
  bool rank_deficient = false;
  std::vector<double> history;  // objective per iteration (cg), or the final value
};

struct FunctionalMap {
  enum class Provenance { solved, from_pointwise, refined };

  Mat C;  // k_Y x k_X
  Provenance provenance = Provenance::solved;
  SolverConfig solver;
  std::vector<std::string> descriptor_kinds;
  ObjectiveTerms terms;
  SolverInfo info;
  int refine_steps = 0;

  Index k_x() const { return C.cols(); }
  Index k_y() const { return C.rows(); }
};

std::string to_string(FunctionalMap::Provenance p);
FunctionalMap::Provenance parse_provenance(const std::string& s);

/// The convex quadratic
///   ||C A - B||^2 + alpha ||Lam_Y C - C Lam_X||^2 + beta sum_i ||S^Y_i C - C S^X_i||^2
/// with A, B spectral descriptor coefficients and S_i = Phi^T diag(f_i) Phi.
class LfmProblem {
 public:
  LfmProblem(const SpectralBasis& bx, const SpectralBasis& by, const DescriptorSet& fx, const DescriptorSet& fy,
             double alpha, double beta);
  /// Raw form; sx/sy may be empty when beta is 0.
  LfmProblem(Mat a, Mat b, Vec lambda_x, Vec lambda_y, std::vector<Mat> sx, std::vector<Mat> sy, double alpha,
             double beta);

  Index k_x() const { return a_.rows(); }
  Index k_y() const { return b_.rows(); }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  const Mat& a() const { return a_; }
  const Mat& b() const { return b_; }

  ObjectiveTerms objective(const Mat& c) const;
  Mat gradient(const Mat& c) const;
  /// Normal operator H(C); the gradient is 2 (H(C) - B A^T).
  Mat apply(const Mat& c) const;
  Mat rhs() const { return b_ * a_.transpose(); }
  /// Diagonal of H in the layout of C.
  Mat diagonal() const;
  /// H as a dense (k_x k_y)^2 matrix acting on column-major vec(C).
  Mat dense_normal_matrix() const;

 private:
  void check() const;
  Mat a_, b_;
  Vec lx_, ly_;
  std::vector<Mat> sx_, sy_;
  double alpha_, beta_;
};

/// Minimizes the problem. Dense normal equations when k_x k_y <= dense_limit, otherwise
/// Jacobi-preconditioned CG. With alpha = beta = 0 the minimum-norm solution is
/// returned and rank deficiency is flagged.
FunctionalMap solve_lfm(const LfmProblem& problem, const SolverConfig& cfg);
FunctionalMap solve_lfm(const SpectralBasis& bx, const SpectralBasis& by, const DescriptorSet& fx,
                        const DescriptorSet& fy, const SolverConfig& cfg);

/// C = Phi_Y^T P Phi_X for a total correspondence X -> Y.
FunctionalMap from_pointwise(const SpectralBasis& bx, const SpectralBasis& by, const Correspondence& corr);

/// For each X node, the Y node whose row of Phi_Y C is nearest to its row of Phi_X.
Correspondence extract_pointwise(const Mat& c, const SpectralBasis& bx, const SpectralBasis& by);

struct ZoomOutTrace {
  std::vector<Index> sizes;              // map size before each extraction
  std::vector<Correspondence> maps;      // extracted point maps, one per size
};

/// Grows C0 by `step_size` per step for `steps` steps, alternating point-map
/// extraction and re-encoding. The trace ends with the map extracted from the result.
FunctionalMap zoomout_refine(const FunctionalMap& c0, const SpectralBasis& bx, const SpectralBasis& by, int steps,
                             int step_size, ZoomOutTrace* trace = nullptr);

/// Steps needed to grow from k0 towards target (never past it).
int zoomout_steps(Index k0, Index target, int step_size);

}  // namespace lfm
