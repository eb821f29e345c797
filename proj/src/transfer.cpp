#include "lfm/transfer.hpp"

#include "lfm/descriptors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>

namespace lfm {

Index Correspondence::assigned() const {
  return std::count_if(assignment.begin(), assignment.end(), [](Index t) { return t >= 0; });
}

void Correspondence::validate(bool require_total) const {
  require(!assignment.empty(), "correspondence is empty");
  require(n_target >= 1, "correspondence has no target nodes");
  for (Index i = 0; i < n(); ++i) {
    const Index t = assignment[i];
    require(t >= -1 && t < n_target, "correspondence: node " + std::to_string(i) + " maps to " + std::to_string(t) +
                                         ", outside [0, " + std::to_string(n_target) + ")");
    if (require_total) require(t >= 0, "correspondence is partial: node " + std::to_string(i) + " is unassigned");
  }
}

Correspondence Correspondence::identity(Index n, Source source) {
  Correspondence c;
  c.source = source;
  c.n_target = n;
  c.assignment.resize(n);
  for (Index i = 0; i < n; ++i) c.assignment[i] = i;
  return c;
}

Correspondence Correspondence::from_anchors(const AnchorSet& anchors, Index n_src, Index n_dst) {
  anchors.validate(n_src, n_dst);
  Correspondence c;
  c.source = Source::anchors;
  c.n_target = n_dst;
  c.assignment.assign(n_src, -1);
  for (const auto& [s, d] : anchors.pairs) c.assignment[s] = d;
  return c;
}

AnchorSet Correspondence::to_anchors() const {
  AnchorSet a;
  for (Index i = 0; i < n(); ++i)
    if (assignment[i] >= 0) a.pairs.emplace_back(i, assignment[i]);
  return a;
}

std::string to_string(Correspondence::Source s) {
  switch (s) {
    case Correspondence::Source::anchors: return "anchors";
    case Correspondence::Source::extracted: return "extracted";
    case Correspondence::Source::ground_truth: return "ground_truth";
  }
  return "unknown";
}

Correspondence::Source parse_correspondence_source(const std::string& s) {
  if (s == "anchors") return Correspondence::Source::anchors;
  if (s == "extracted") return Correspondence::Source::extracted;
  if (s == "ground_truth") return Correspondence::Source::ground_truth;
  throw ValidationError("unknown correspondence source '" + s + "'");
}

double correspondence_accuracy(const Correspondence& c, const Correspondence& truth) {
  require(c.n() == truth.n(), "correspondence sizes differ");
  Index hits = 0, total = 0;
  for (Index i = 0; i < c.n(); ++i) {
    if (truth.assignment[i] < 0) continue;
    ++total;
    hits += c.assignment[i] == truth.assignment[i];
  }
  require(total > 0, "reference correspondence assigns no node");
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::string to_string(LinearTransform::Kind k) {
  switch (k) {
    case LinearTransform::Kind::orthogonal: return "orthogonal";
    case LinearTransform::Kind::linear: return "linear";
    case LinearTransform::Kind::affine: return "affine";
  }
  return "unknown";
}

LinearTransform::Kind parse_transform_kind(const std::string& s) {
  if (s == "orthogonal" || s == "ortho") return LinearTransform::Kind::orthogonal;
  if (s == "linear") return LinearTransform::Kind::linear;
  if (s == "affine") return LinearTransform::Kind::affine;
  throw ValidationError("unknown transform '" + s + "' (expected ortho, linear or affine)");
}

Mat LinearTransform::apply(const Mat& x) const {
  require(x.cols() == d_in(), "transform expects dimension " + std::to_string(d_in()) + ", got " +
                                  std::to_string(x.cols()));
  Mat out = x * matrix.transpose();
  if (offset.size() == d_out()) out.rowwise() += offset.transpose();
  return out;
}

LinearTransform fit_transform(const Mat& x, const Mat& y, const Correspondence& corr, LinearTransform::Kind kind) {
  corr.validate(false);
  require(corr.n() == x.rows() && corr.n_target == y.rows(), "fit_transform: correspondence does not match the point sets");
  const Index m = corr.assigned();
  require(m >= 1, "fit_transform: correspondence assigns no pairs");
  Mat xs(m, x.cols()), ys(m, y.cols());
  for (Index i = 0, r = 0; i < corr.n(); ++i)
    if (corr.assignment[i] >= 0) {
      xs.row(r) = x.row(i);
      ys.row(r) = y.row(corr.assignment[i]);
      ++r;
    }

  LinearTransform t;
  t.kind = kind;
  t.offset = Vec::Zero(y.cols());
  if (kind == LinearTransform::Kind::orthogonal) {
    // min ||Xs M^T - Ys|| over orthogonal M: Ys^T Xs = U S V^T, M = U V^T.
    Eigen::JacobiSVD<Mat> svd(ys.transpose() * xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    t.matrix = svd.matrixU() * svd.matrixV().transpose();
    return t;
  }
  Vec mx = Vec::Zero(x.cols()), my = Vec::Zero(y.cols());
  if (kind == LinearTransform::Kind::affine) {
    mx = xs.colwise().mean();
    my = ys.colwise().mean();
    xs.rowwise() -= mx.transpose();
    ys.rowwise() -= my.transpose();
  }
  Mat gram = xs.transpose() * xs;
  const double scale = gram.trace() / static_cast<double>(gram.rows());
  require(scale > 0.0, "fit_transform: source points have zero variance");
  gram.diagonal().array() += 1e-8 * scale;
  const Eigen::LLT<Mat> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericalError("fit_transform: normal equations are not positive definite");
  t.matrix = llt.solve(xs.transpose() * ys).transpose();
  if (kind == LinearTransform::Kind::affine) t.offset = my - t.matrix * mx;
  return t;
}

LinearTransform fit_transform(const EmbeddingSet& x, const EmbeddingSet& y, const Correspondence& corr,
                              LinearTransform::Kind kind) {
  return fit_transform(x.data, y.data, corr, kind);
}

Mat transfer_coefficients(const Mat& c, const Mat& a) {
  require(a.rows() == c.cols(), "transfer_coefficients: coefficients have " + std::to_string(a.rows()) +
                                    " rows, map expects " + std::to_string(c.cols()));
  return c * a;
}

Mat embed_as_distance_functions(const Mat& points, const EmbeddingSet& nodes, Metric metric) {
  require(points.cols() == nodes.d(), "distance function: point has dimension " + std::to_string(points.cols()) +
                                          ", space has " + std::to_string(nodes.d()));
  check_metric_input(metric, points);
  Mat f = pairwise_distances(metric, nodes.data, points);
  normalize_unit_max(f);
  return f;
}

Vec embed_as_distance_function(const Vec& x, const EmbeddingSet& nodes, Metric metric) {
  return embed_as_distance_functions(x.transpose(), nodes, metric).col(0);
}

}  // namespace lfm
