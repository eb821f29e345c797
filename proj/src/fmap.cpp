#include "lfm/fmap.hpp"
#include "lfm/nearest.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <sstream>

namespace lfm {

namespace {

std::vector<Mat> descriptor_operators(const SpectralBasis& b, const DescriptorSet& f) {
  std::vector<Mat> ops(f.count());
  parallel_for(0, f.count(), [&](Index i) {
    const Mat weighted = b.eigenvectors.array().colwise() * f.values.col(i).array();
    ops[i] = b.eigenvectors.transpose() * weighted;
    ops[i] = 0.5 * (ops[i] + ops[i].transpose()).eval();
  });
  return ops;
}

double dot(const Mat& a, const Mat& b) { return (a.array() * b.array()).sum(); }

}  // namespace

void SolverConfig::validate() const {
  require(std::isfinite(alpha) && alpha >= 0.0, "solver alpha must be >= 0");
  require(std::isfinite(beta) && beta >= 0.0, "solver beta must be >= 0");
  require(max_iter >= 1, "solver max_iter must be >= 1");
  require(std::isfinite(tol) && tol > 0.0, "solver tol must be > 0");
  require(dense_limit >= 0, "solver dense_limit must be >= 0");
}

std::string to_string(FunctionalMap::Provenance p) {
  switch (p) {
    case FunctionalMap::Provenance::solved: return "solved";
    case FunctionalMap::Provenance::from_pointwise: return "from_pointwise";
    case FunctionalMap::Provenance::refined: return "refined";
  }
  return "unknown";
}

FunctionalMap::Provenance parse_provenance(const std::string& s) {
  if (s == "solved") return FunctionalMap::Provenance::solved;
  if (s == "from_pointwise") return FunctionalMap::Provenance::from_pointwise;
  if (s == "refined") return FunctionalMap::Provenance::refined;
  throw ValidationError("unknown map provenance '" + s + "'");
}

LfmProblem::LfmProblem(const SpectralBasis& bx, const SpectralBasis& by, const DescriptorSet& fx,
                       const DescriptorSet& fy, double alpha, double beta)
    : alpha_(alpha), beta_(beta) {
  check_paired(fx, fy);
  require(fx.n() == bx.n(), "descriptors on X have " + std::to_string(fx.n()) + " rows, basis has " +
                                std::to_string(bx.n()) + " nodes");
  require(fy.n() == by.n(), "descriptors on Y have " + std::to_string(fy.n()) + " rows, basis has " +
                                std::to_string(by.n()) + " nodes");
  a_ = project(bx, fx.values);
  b_ = project(by, fy.values);
  lx_ = bx.eigenvalues;
  ly_ = by.eigenvalues;
  if (beta_ > 0.0) {
    sx_ = descriptor_operators(bx, fx);
    sy_ = descriptor_operators(by, fy);
  }
  check();
}

LfmProblem::LfmProblem(Mat a, Mat b, Vec lambda_x, Vec lambda_y, std::vector<Mat> sx, std::vector<Mat> sy,
                       double alpha, double beta)
    : a_(std::move(a)), b_(std::move(b)), lx_(std::move(lambda_x)), ly_(std::move(lambda_y)), sx_(std::move(sx)),
      sy_(std::move(sy)), alpha_(alpha), beta_(beta) {
  check();
}

void LfmProblem::check() const {
  require(alpha_ >= 0.0 && beta_ >= 0.0, "regularizer weights must be >= 0");
  require(a_.cols() == b_.cols() && a_.cols() >= 1, "descriptor coefficient matrices need equal, nonzero column counts");
  require(lx_.size() == a_.rows() && ly_.size() == b_.rows(), "eigenvalue counts do not match coefficient rows");
  require(sx_.size() == sy_.size(), "descriptor operator counts differ");
  require(beta_ == 0.0 || !sx_.empty(), "beta > 0 needs descriptor operators");
  for (std::size_t i = 0; i < sx_.size(); ++i)
    require(sx_[i].rows() == k_x() && sx_[i].cols() == k_x() && sy_[i].rows() == k_y() && sy_[i].cols() == k_y(),
            "descriptor operator has the wrong shape");
  require(a_.allFinite() && b_.allFinite(), "descriptor coefficients must be finite");
}

ObjectiveTerms LfmProblem::objective(const Mat& c) const {
  require(c.rows() == k_y() && c.cols() == k_x(), "objective: map has the wrong shape");
  ObjectiveTerms t;
  t.data = (c * a_ - b_).squaredNorm();
  if (alpha_ > 0.0) t.laplacian = alpha_ * (ly_.asDiagonal() * c - c * lx_.asDiagonal()).squaredNorm();
  if (beta_ > 0.0)
    for (std::size_t i = 0; i < sx_.size(); ++i) t.descriptor += beta_ * (sy_[i] * c - c * sx_[i]).squaredNorm();
  t.total = t.data + t.laplacian + t.descriptor;
  return t;
}

Mat LfmProblem::apply(const Mat& c) const {
  Mat h = c * (a_ * a_.transpose());
  if (alpha_ > 0.0)
    for (Index q = 0; q < k_x(); ++q)
      for (Index p = 0; p < k_y(); ++p) {
        const double g = ly_(p) - lx_(q);
        h(p, q) += alpha_ * g * g * c(p, q);
      }
  if (beta_ > 0.0)
    for (std::size_t i = 0; i < sx_.size(); ++i) {
      const Mat comm = sy_[i] * c - c * sx_[i];
      h.noalias() += beta_ * (sy_[i] * comm - comm * sx_[i]);
    }
  return h;
}

Mat LfmProblem::gradient(const Mat& c) const { return 2.0 * (apply(c) - rhs()); }

Mat LfmProblem::diagonal() const {
  const Vec gram = (a_ * a_.transpose()).diagonal();
  Mat d(k_y(), k_x());
  for (Index q = 0; q < k_x(); ++q)
    for (Index p = 0; p < k_y(); ++p) {
      const double g = ly_(p) - lx_(q);
      d(p, q) = gram(q) + alpha_ * g * g;
    }
  if (beta_ > 0.0)
    for (std::size_t i = 0; i < sx_.size(); ++i) {
      const Vec sy2 = (sy_[i] * sy_[i]).diagonal();
      const Vec sx2 = (sx_[i] * sx_[i]).diagonal();
      for (Index q = 0; q < k_x(); ++q)
        for (Index p = 0; p < k_y(); ++p)
          d(p, q) += beta_ * (sy2(p) + sx2(q) - 2.0 * sy_[i](p, p) * sx_[i](q, q));
    }
  return d;
}

Mat LfmProblem::dense_normal_matrix() const {
  const Index kx = k_x(), ky = k_y(), m = kx * ky;
  Mat h = Mat::Zero(m, m);
  const Mat gram = a_ * a_.transpose();
  // vec(C G) = (G kron I) vec(C), column-major vec.
  for (Index q = 0; q < kx; ++q)
    for (Index q2 = 0; q2 < kx; ++q2)
      for (Index p = 0; p < ky; ++p) h(p + q * ky, p + q2 * ky) += gram(q, q2);
  for (Index q = 0; q < kx; ++q)
    for (Index p = 0; p < ky; ++p) {
      const double g = ly_(p) - lx_(q);
      h(p + q * ky, p + q * ky) += alpha_ * g * g;
    }
  if (beta_ > 0.0) {
    Mat sy2 = Mat::Zero(ky, ky), sx2 = Mat::Zero(kx, kx);
    for (std::size_t i = 0; i < sx_.size(); ++i) {
      sy2 += sy_[i] * sy_[i];
      sx2 += sx_[i] * sx_[i];
    }
    for (Index q = 0; q < kx; ++q)
      for (Index q2 = 0; q2 < kx; ++q2)
        for (Index p = 0; p < ky; ++p) {
          if (q == q2)
            for (Index p2 = 0; p2 < ky; ++p2) h(p + q * ky, p2 + q2 * ky) += beta_ * sy2(p, p2);
          h(p + q * ky, p + q2 * ky) += beta_ * sx2(q, q2);
        }
    for (std::size_t i = 0; i < sx_.size(); ++i)
      for (Index q = 0; q < kx; ++q)
        for (Index q2 = 0; q2 < kx; ++q2) {
          const double s = -2.0 * beta_ * sx_[i](q, q2);
          if (s == 0.0) continue;
          h.block(q * ky, q2 * ky, ky, ky) += s * sy_[i];
        }
  }
  return h;
}

FunctionalMap solve_lfm(const LfmProblem& problem, const SolverConfig& cfg) {
  cfg.validate();
  const Index kx = problem.k_x(), ky = problem.k_y();
  FunctionalMap out;
  out.provenance = FunctionalMap::Provenance::solved;
  out.solver = cfg;
  const Mat rhs = problem.rhs();

  if (problem.alpha() == 0.0 && problem.beta() == 0.0) {
    // Plain least squares A^T C^T = B^T; the COD gives the minimum-norm solution.
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(problem.a().transpose());
    out.C = cod.solve(problem.b().transpose()).transpose();
    out.info.method = "min_norm";
    out.info.rank_deficient = cod.rank() < kx;
  } else if (kx * ky <= cfg.dense_limit) {
    const Mat h = problem.dense_normal_matrix();
    const Vec r = Eigen::Map<const Vec>(rhs.data(), rhs.size());
    Eigen::LLT<Mat> llt(h);
    Vec x;
    if (llt.info() == Eigen::Success) {
      x = llt.solve(r);
      out.info.method = "dense";
    } else {
      Eigen::CompleteOrthogonalDecomposition<Mat> cod(h);
      x = cod.solve(r);
      out.info.method = "min_norm";
      out.info.rank_deficient = cod.rank() < h.rows();
    }
    out.C = Eigen::Map<const Mat>(x.data(), ky, kx);
  } else {
    // Jacobi-preconditioned CG on H(C) = B A^T.
    Mat diag = problem.diagonal();
    for (Index i = 0; i < diag.size(); ++i)
      if (!(diag.data()[i] > 0.0)) diag.data()[i] = 1.0;
    const double bnorm2 = problem.b().squaredNorm();
    const double rnorm0 = rhs.norm();
    Mat x = Mat::Zero(ky, kx), r = rhs;
    Mat z = r.cwiseQuotient(diag), p = z;
    double rz = dot(r, z);
    int it = 0;
    bool converged = rnorm0 == 0.0;
    while (!converged && it < cfg.max_iter) {
      const Mat hp = problem.apply(p);
      const double php = dot(p, hp);
      if (!(php > 0.0)) break;
      const double step = rz / php;
      x += step * p;
      r -= step * hp;
      ++it;
      // f(x) = x.Hx - 2 x.R + |B|^2 with Hx = R - r.
      out.info.history.push_back(bnorm2 - dot(x, rhs) - dot(x, r));
      if (r.norm() <= cfg.tol * rnorm0) {
        converged = true;
        break;
      }
      z = r.cwiseQuotient(diag);
      const double rz_new = dot(r, z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    out.C = x;
    out.info.method = "cg";
    out.info.iterations = it;
    if (!converged) {
      std::ostringstream msg;
      msg << "functional map solver did not converge in " << it << " iterations; gradient norm "
          << problem.gradient(x).norm();
      throw NumericalError(msg.str());
    }
  }
  if (!out.C.allFinite()) throw NumericalError("functional map solver produced non-finite entries");
  out.terms = problem.objective(out.C);
  out.info.gradient_norm = problem.gradient(out.C).norm();
  if (out.info.history.empty()) out.info.history.push_back(out.terms.total);
  return out;
}

FunctionalMap solve_lfm(const SpectralBasis& bx, const SpectralBasis& by, const DescriptorSet& fx,
                        const DescriptorSet& fy, const SolverConfig& cfg) {
  cfg.validate();
  const LfmProblem problem(bx, by, fx, fy, cfg.alpha, cfg.beta);
  FunctionalMap m = solve_lfm(problem, cfg);
  m.descriptor_kinds = {to_string(fx.kind)};
  return m;
}

namespace {

Mat pointwise_matrix(const Eigen::Ref<const Mat>& phi_x, const Eigen::Ref<const Mat>& phi_y,
                     const Correspondence& corr) {
  Mat gathered(phi_x.rows(), phi_y.cols());
  for (Index x = 0; x < corr.n(); ++x) gathered.row(x) = phi_y.row(corr.assignment[x]);
  return gathered.transpose() * phi_x;
}

Correspondence extract(const Mat& c, const Eigen::Ref<const Mat>& phi_x, const Eigen::Ref<const Mat>& phi_y) {
  Correspondence out;
  out.source = Correspondence::Source::extracted;
  out.n_target = phi_y.rows();
  out.assignment = nearest_rows(phi_x, phi_y * c);
  return out;
}

}  // namespace

FunctionalMap from_pointwise(const SpectralBasis& bx, const SpectralBasis& by, const Correspondence& corr) {
  corr.validate(true);
  require(corr.n() == bx.n(), "correspondence covers " + std::to_string(corr.n()) + " nodes, X basis has " +
                                  std::to_string(bx.n()));
  require(corr.n_target == by.n(), "correspondence targets " + std::to_string(corr.n_target) +
                                       " nodes, Y basis has " + std::to_string(by.n()));
  FunctionalMap out;
  out.provenance = FunctionalMap::Provenance::from_pointwise;
  out.C = pointwise_matrix(bx.eigenvectors, by.eigenvectors, corr);
  return out;
}

Correspondence extract_pointwise(const Mat& c, const SpectralBasis& bx, const SpectralBasis& by) {
  require(c.rows() == by.size() && c.cols() == bx.size(),
          "extract_pointwise: map is " + std::to_string(c.rows()) + "x" + std::to_string(c.cols()) +
              ", bases have sizes " + std::to_string(by.size()) + " (Y) and " + std::to_string(bx.size()) + " (X)");
  return extract(c, bx.eigenvectors, by.eigenvectors);
}

int zoomout_steps(Index k0, Index target, int step_size) {
  require(step_size >= 1, "zoomout step size must be >= 1");
  if (target <= k0) return 0;
  return static_cast<int>((target - k0) / step_size);
}

FunctionalMap zoomout_refine(const FunctionalMap& c0, const SpectralBasis& bx, const SpectralBasis& by, int steps,
                             int step_size, ZoomOutTrace* trace) {
  require(steps >= 0, "zoomout steps must be >= 0");
  require(step_size >= 1, "zoomout step size must be >= 1");
  Index kx = c0.k_x(), ky = c0.k_y();
  require(kx >= 1 && ky >= 1, "zoomout needs a non-empty seed map");
  require(kx + static_cast<Index>(steps) * step_size <= bx.size() &&
              ky + static_cast<Index>(steps) * step_size <= by.size(),
          "zoomout: growing a " + std::to_string(ky) + "x" + std::to_string(kx) + " map by " + std::to_string(steps) +
              " x " + std::to_string(step_size) + " needs bases of at least that size (have " +
              std::to_string(by.size()) + ", " + std::to_string(bx.size()) + ")");
  require(bx.n() >= 1 && by.n() >= 1, "zoomout: empty bases");

  if (trace) *trace = {};
  Mat c = c0.C;
  for (int s = 0; s < steps; ++s) {
    const Correspondence t = extract(c, bx.eigenvectors.leftCols(kx), by.eigenvectors.leftCols(ky));
    if (trace) {
      trace->sizes.push_back(kx);
      trace->maps.push_back(t);
    }
    kx += step_size;
    ky += step_size;
    c = pointwise_matrix(bx.eigenvectors.leftCols(kx), by.eigenvectors.leftCols(ky), t);
  }
  if (trace) {
    trace->sizes.push_back(kx);
    trace->maps.push_back(extract(c, bx.eigenvectors.leftCols(kx), by.eigenvectors.leftCols(ky)));
  }
  FunctionalMap out = c0;
  out.C = c;
  out.provenance = FunctionalMap::Provenance::refined;
  out.refine_steps = c0.refine_steps + steps;
  return out;
}

}  // namespace lfm
