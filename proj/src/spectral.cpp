#include "lfm/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace lfm {

namespace {

// Two passes of classical Gram-Schmidt against the first `cols` columns of V.
void orthogonalize(const Mat& v, Index cols, Vec& w) {
  if (cols == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Vec c = v.leftCols(cols).transpose() * w;
    w.noalias() -= v.leftCols(cols) * c;
  }
}

Vec random_vector(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace

SpectralBasis SpectralBasis::truncated(Index k) const {
  require(k >= 1 && k <= size(), "cannot truncate a basis of size " + std::to_string(size()) + " to " +
                                     std::to_string(k));
  SpectralBasis b;
  b.eigenvalues = eigenvalues.head(k);
  b.eigenvectors = eigenvectors.leftCols(k);
  b.residuals = residuals.size() == size() ? Vec(residuals.head(k)) : Vec::Zero(k);
  return b;
}

void SpectralBasis::validate() const {
  require(size() >= 1 && n() >= 1, "spectral basis is empty");
  require(eigenvalues.size() == size(), "spectral basis: eigenvalue count does not match eigenvector columns");
  require(residuals.size() == size(), "spectral basis: residual count does not match eigenvector columns");
  require(eigenvectors.allFinite() && eigenvalues.allFinite(), "spectral basis contains non-finite values");
  for (Index i = 1; i < size(); ++i)
    require(eigenvalues(i) >= eigenvalues(i - 1), "spectral basis eigenvalues are not sorted ascending");
}

void canonicalize_sign(Eigen::Ref<Vec> v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  if (v.size() > 0 && v(best) < 0.0) v = -v;
}

SpectralBasis eigenbasis(const SpMat& laplacian, Index k_e, const EigenOptions& opts) {
  const Index n = laplacian.rows();
  require(laplacian.cols() == n, "eigenbasis: operator must be square");
  require(k_e >= 1 && k_e <= n, "eigenbasis: k_e = " + std::to_string(k_e) + " must lie in [1, " +
                                    std::to_string(n) + "]");
  require(opts.tol > 0.0, "eigenbasis: tol must be positive");

  const Index m = std::min(n, opts.subspace > 0 ? std::max(opts.subspace, k_e + 1)
                                                : std::max(2 * k_e + 20, k_e + 40));
  const Index budget = std::max(opts.max_matvecs > 0 ? opts.max_matvecs : 50 * k_e, m);
  // Converge internally below tol so the explicitly recomputed residual stays under it.
  const double inner_tol = 0.1 * opts.tol;

  // M = 2I - L has the wanted eigenpairs at the top of its spectrum.
  auto apply = [&](const Vec& x) -> Vec { return 2.0 * x - laplacian * x; };

  std::mt19937_64 rng(opts.seed);
  Mat v(n, m), av(n, m), h = Mat::Zero(m, m);
  Index cols = 0, matvecs = 0;
  Vec w = random_vector(n, rng);

  Vec theta;
  Mat s;
  double worst = 0.0;
  while (true) {
    while (cols < m) {
      const double scale = std::max(1.0, w.norm());
      orthogonalize(v, cols, w);
      double nrm = w.norm();
      if (nrm <= 1e-12 * scale) {
        // Invariant subspace found: continue from a fresh direction.
        w = random_vector(n, rng);
        orthogonalize(v, cols, w);
        nrm = w.norm();
        if (nrm <= 1e-12) break;
      }
      v.col(cols) = w / nrm;
      av.col(cols) = apply(v.col(cols));
      ++matvecs;
      const Vec hc = v.leftCols(cols + 1).transpose() * av.col(cols);
      h.col(cols).head(cols + 1) = hc;
      h.row(cols).head(cols + 1) = hc.transpose();
      w = av.col(cols);
      ++cols;
    }

    const Mat hs = 0.5 * (h.topLeftCorner(cols, cols) + h.topLeftCorner(cols, cols).transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(hs);
    // Largest Ritz values of M first.
    theta = es.eigenvalues().reverse();
    s = es.eigenvectors().rowwise().reverse();

    const Index want = std::min(k_e, cols);
    const Mat y = v.leftCols(cols) * s.leftCols(want);
    const Mat ay = av.leftCols(cols) * s.leftCols(want);
    worst = 0.0;
    for (Index i = 0; i < want; ++i) worst = std::max(worst, (ay.col(i) - theta(i) * y.col(i)).norm());
    const bool full = cols == n;
    if ((want == k_e && worst <= inner_tol) || full) break;
    if (matvecs >= budget) {
      std::ostringstream msg;
      msg << "eigenbasis did not converge within " << budget << " matrix-vector products; achieved residual "
          << worst << " (tol " << opts.tol << ")";
      throw NumericalError(msg.str());
    }

    // Thick restart: keep the best Ritz vectors plus the pending Lanczos direction.
    const Index keep = std::min(cols - 1, k_e + (m - k_e) / 2);
    orthogonalize(v, cols, w);
    v.leftCols(keep) = (v.leftCols(cols) * s.leftCols(keep)).eval();
    av.leftCols(keep) = (av.leftCols(cols) * s.leftCols(keep)).eval();
    h.setZero();
    for (Index i = 0; i < keep; ++i) h(i, i) = theta(i);
    cols = keep;
  }

  SpectralBasis basis;
  basis.eigenvectors = v.leftCols(cols) * s.leftCols(k_e);
  basis.eigenvalues.resize(k_e);
  basis.residuals.resize(k_e);
  for (Index i = 0; i < k_e; ++i) {
    auto phi = basis.eigenvectors.col(i);
    phi.normalize();
    canonicalize_sign(phi);
    const Vec lphi = laplacian * phi;
    double lambda = phi.dot(lphi);
    if (lambda < 0.0 && lambda > -1e-10) lambda = 0.0;
    basis.eigenvalues(i) = lambda;
    basis.residuals(i) = (lphi - lambda * phi).norm();
  }
  // Rayleigh quotients can reorder pairs that are equal to rounding; keep ascending.
  std::vector<Index> order(k_e);
  for (Index i = 0; i < k_e; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return basis.eigenvalues(a) < basis.eigenvalues(b); });
  SpectralBasis sorted;
  sorted.eigenvalues.resize(k_e);
  sorted.residuals.resize(k_e);
  sorted.eigenvectors.resize(n, k_e);
  for (Index i = 0; i < k_e; ++i) {
    sorted.eigenvalues(i) = basis.eigenvalues(order[i]);
    sorted.residuals(i) = basis.residuals(order[i]);
    sorted.eigenvectors.col(i) = basis.eigenvectors.col(order[i]);
  }
  const double max_res = sorted.residuals.maxCoeff();
  if (max_res > opts.tol) {
    std::ostringstream msg;
    msg << "eigenbasis residual " << max_res << " exceeds tol " << opts.tol;
    throw NumericalError(msg.str());
  }
  return sorted;
}

Mat project(const SpectralBasis& basis, const Mat& f) {
  require(f.rows() == basis.n(), "project: function has " + std::to_string(f.rows()) + " rows, basis has " +
                                     std::to_string(basis.n()) + " nodes");
  require(f.allFinite(), "project: function values must be finite");
  return basis.eigenvectors.transpose() * f;
}

Mat reconstruct(const SpectralBasis& basis, const Mat& a) {
  require(a.rows() == basis.size(), "reconstruct: coefficients have " + std::to_string(a.rows()) +
                                        " rows, basis has " + std::to_string(basis.size()) + " functions");
  return basis.eigenvectors * a;
}

}  // namespace lfm
