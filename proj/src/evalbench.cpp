#include "lfm/evalbench.hpp"

#include "lfm/analysis.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

namespace lfm {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word.
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e5a7ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Mat gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Mat m(rows, cols);
  // Fill row by row so the stream order matches the row-major reading of the data.
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = n01(rng);
  return m;
}

Mat haar_orthogonal(Index d, std::mt19937_64& rng) {
  const Mat g = gaussian(d, d, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(d, d);
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

RetrievalResult mrr(const Mat& queries, const Mat& targets, std::span<const Index> ground_truth) {
  require(queries.cols() == targets.cols(), "mrr: queries have dimension " + std::to_string(queries.cols()) +
                                                ", targets " + std::to_string(targets.cols()));
  require(static_cast<Index>(ground_truth.size()) == queries.rows(), "mrr: ground truth must cover every query");
  require(targets.rows() >= 1, "mrr: empty target set");
  std::vector<Index> active;
  for (Index q = 0; q < queries.rows(); ++q) {
    const Index t = ground_truth[q];
    require(t >= -1 && t < targets.rows(), "mrr: ground truth target " + std::to_string(t) + " out of range");
    if (t >= 0) active.push_back(q);
  }
  require(!active.empty(), "mrr: empty query set");

  std::vector<double> recip(active.size());
  constexpr Index kBlock = 256;
  for (Index b0 = 0; b0 < static_cast<Index>(active.size()); b0 += kBlock) {
    const Index rows = std::min<Index>(kBlock, static_cast<Index>(active.size()) - b0);
    Mat block(rows, queries.cols());
    for (Index i = 0; i < rows; ++i) block.row(i) = queries.row(active[b0 + i]);
    const Mat dist = pairwise_distances(Metric::angular, block, targets);
    for (Index i = 0; i < rows; ++i) {
      const Index truth = ground_truth[active[b0 + i]];
      const double dt = dist(i, truth);
      Index rank = 1;
      for (Index j = 0; j < targets.rows(); ++j)
        if (dist(i, j) < dt || (dist(i, j) == dt && j < truth)) ++rank;
      recip[b0 + i] = 1.0 / static_cast<double>(rank);
    }
  }
  RetrievalResult r;
  r.queries = static_cast<Index>(active.size());
  double sum = 0.0, hits = 0.0;
  for (double v : recip) {
    sum += v;
    hits += v == 1.0;
  }
  r.mrr = sum / static_cast<double>(r.queries);
  r.hits_at_1 = hits / static_cast<double>(r.queries);
  return r;
}

RetrievalResult mrr(const EmbeddingSet& queries, const EmbeddingSet& targets, const Correspondence& ground_truth) {
  require(ground_truth.n_target == targets.n(), "mrr: ground truth targets a different point count");
  return mrr(queries.data, targets.data, ground_truth.assignment);
}

SyntheticPair synthetic_pair(Index n, Index d, double noise_level, std::uint64_t seed, int components) {
  require(d >= 2 && n > d, "synthetic_pair needs n > d >= 2 (got n=" + std::to_string(n) + ", d=" +
                               std::to_string(d) + ")");
  require(std::isfinite(noise_level) && noise_level >= 0.0, "noise level must be a finite value >= 0");
  require(components >= 1, "synthetic_pair needs at least one component");
  std::mt19937_64 rng(seed);

  // Means spread so the expected distance between two of them is 6; redraw until all pairs are >= 4 apart.
  const double spread = 6.0 / std::sqrt(2.0 * static_cast<double>(d));
  Mat means;
  for (int attempt = 0;; ++attempt) {
    means = gaussian(components, d, rng) * spread;
    double closest = std::numeric_limits<double>::infinity();
    for (int a = 0; a < components; ++a)
      for (int b = a + 1; b < components; ++b) closest = std::min(closest, (means.row(a) - means.row(b)).norm());
    if (closest >= 4.0) break;
    if (attempt >= 1000) throw NumericalError("synthetic_pair: could not place separated mixture means");
  }
  std::uniform_int_distribution<int> pick(0, components - 1);
  std::vector<int> lab(n);
  for (auto& l : lab) l = pick(rng);
  Mat x = gaussian(n, d, rng);
  for (Index i = 0; i < n; ++i) x.row(i) += means.row(lab[i]);

  const Mat q = haar_orthogonal(d, rng);
  std::vector<Index> perm(n);  // y row j is x row perm[j]
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  const Vec mean = x.colwise().mean();
  const double sigma = std::sqrt((x.rowwise() - mean.transpose()).colwise().squaredNorm().mean() /
                                 static_cast<double>(n - 1));
  Mat y(n, d);
  for (Index j = 0; j < n; ++j) y.row(j) = x.row(perm[j]) * q.transpose();
  if (noise_level > 0.0) y += noise_level * sigma * gaussian(n, d, rng);

  SyntheticPair p;
  p.x = EmbeddingSet::from_matrix(std::move(x));
  std::vector<std::string> yids(n);
  for (Index j = 0; j < n; ++j) yids[j] = "y" + std::to_string(j);
  p.y = EmbeddingSet::from_matrix(std::move(y), std::move(yids));
  p.transform = q;
  p.noise_level = noise_level;
  p.sigma_x = sigma;
  p.ground_truth.source = Correspondence::Source::ground_truth;
  p.ground_truth.n_target = n;
  p.ground_truth.assignment.resize(n);
  for (Index j = 0; j < n; ++j) p.ground_truth.assignment[perm[j]] = j;

  for (int c = 0; c < components; ++c) p.labels_x.classes.push_back("c" + std::to_string(c));
  p.labels_y.classes = p.labels_x.classes;
  p.labels_x.labels.resize(n);
  p.labels_y.labels.resize(n);
  for (Index i = 0; i < n; ++i) p.labels_x.labels[i] = p.labels_x.classes[lab[i]];
  for (Index j = 0; j < n; ++j) p.labels_y.labels[j] = p.labels_x.classes[lab[perm[j]]];
  return p;
}

double stitching_accuracy(const EmbeddingSet& x_test, const LinearTransform& transform, const EmbeddingSet& y_train,
                          const LabelAssignment& y_labels, const LabelAssignment& x_labels) {
  y_labels.validate(y_train.n());
  x_labels.validate(x_test.n());
  const std::set<std::string> cy(y_labels.classes.begin(), y_labels.classes.end());
  const std::set<std::string> cx(x_labels.classes.begin(), x_labels.classes.end());
  require(cx == cy, "stitching: the two label sets use different class vocabularies");
  require(transform.d_out() == y_train.d(), "stitching: transform output dimension does not match the train space");

  const auto codes = y_labels.codes();
  const Index nc = static_cast<Index>(y_labels.classes.size());
  Mat centroids = Mat::Zero(nc, y_train.d());
  Vec counts = Vec::Zero(nc);
  for (Index i = 0; i < y_train.n(); ++i) {
    centroids.row(codes[i]) += y_train.data.row(i);
    counts(codes[i]) += 1.0;
  }
  for (Index c = 0; c < nc; ++c)
    if (counts(c) > 0.0) centroids.row(c) /= counts(c);

  const Mat z = transform.apply(x_test.data);
  Index correct = 0;
  for (Index i = 0; i < z.rows(); ++i) {
    Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < nc; ++c) {
      if (counts(c) == 0.0) continue;
      const double dd = (z.row(i) - centroids.row(c)).squaredNorm();
      if (dd < best_d) {
        best_d = dd;
        best = c;
      }
    }
    correct += y_labels.classes[best] == x_labels.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(z.rows());
}

double spearman(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && a.size() >= 2, "spearman needs two equal-length samples of size >= 2");
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const Vec x = Eigen::Map<const Vec>(ra.data(), ra.size()).array() - (ra.size() + 1) / 2.0;
  const Vec y = Eigen::Map<const Vec>(rb.data(), rb.size()).array() - (rb.size() + 1) / 2.0;
  const double den = x.norm() * y.norm();
  return den > 0.0 ? x.dot(y) / den : 0.0;
}

RetrievalResult functional_space_retrieval(const Mat& c, const SpaceModel& sx, const SpaceModel& sy,
                                           const Correspondence& ground_truth) {
  require(c.cols() <= sx.basis.size() && c.rows() <= sy.basis.size(), "map is larger than the bases");
  const Mat fx = embed_as_distance_functions(sx.points.data, sx.points, sx.graph.config.metric);
  const Mat fy = embed_as_distance_functions(sy.points.data, sy.points, sy.graph.config.metric);
  const Mat qx = transfer_coefficients(c, sx.basis.eigenvectors.leftCols(c.cols()).transpose() * fx);
  const Mat ty = sy.basis.eigenvectors.leftCols(c.rows()).transpose() * fy;
  return mrr(qx.transpose(), ty.transpose(), ground_truth.assignment);
}

AnchorSet sample_anchors(const Correspondence& ground_truth, Index count, std::uint64_t seed) {
  std::vector<Index> pool;
  for (Index i = 0; i < ground_truth.n(); ++i)
    if (ground_truth.assignment[i] >= 0) pool.push_back(i);
  require(count >= 0 && count <= static_cast<Index>(pool.size()),
          "cannot sample " + std::to_string(count) + " anchors from " + std::to_string(pool.size()) + " pairs");
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  AnchorSet a;
  for (Index i = 0; i < count; ++i) a.pairs.emplace_back(pool[i], ground_truth.assignment[pool[i]]);
  return a;
}

BenchGrid bench_grid(const std::string& name) {
  BenchGrid g;
  g.name = name;
  g.pipeline.k_e = 30;
  g.pipeline.zoomout.target = 60;
  if (name == "default") {
    g.metrics = {Metric::angular, Metric::euclidean};
    g.noise = {0.0, 0.1, 0.5, 1.0};
    g.anchors = {5};
    g.descriptors = {DescriptorKind::anchor_geodesic};
  } else if (name == "ablation") {
    g.metrics = {Metric::angular};
    g.noise = {0.1};
    g.anchors = {10};
    g.descriptors = {DescriptorKind::anchor_geodesic, DescriptorKind::anchor_metric, DescriptorKind::label_indicator,
                     DescriptorKind::hks, DescriptorKind::wks};
  } else if (name == "quick") {
    g.n = 300;
    g.d = 16;
    g.metrics = {Metric::angular, Metric::euclidean};
    g.noise = {0.0, 0.5};
    g.anchors = {5};
    g.descriptors = {DescriptorKind::anchor_geodesic};
    g.pipeline.k_e = 20;
    g.pipeline.zoomout.target = 30;
  } else {
    throw ValidationError("unknown grid '" + name + "' (expected default, ablation or quick)");
  }
  return g;
}

CellResult run_cell(const SyntheticPair& pair, Metric metric, Index anchors, DescriptorKind descriptor,
                    const PipelineConfig& base, std::uint64_t anchor_seed) {
  const auto start = std::chrono::steady_clock::now();
  PipelineConfig cfg = base;
  cfg.graph.metric = metric;
  cfg.descriptor = descriptor;
  const SpaceModel sx = build_space(pair.x, cfg);
  const SpaceModel sy = build_space(pair.y, cfg);
  const AnchorSet a = sample_anchors(pair.ground_truth, anchors, anchor_seed);
  const auto [fx, fy] = make_descriptors(sx, sy, cfg, &a, &pair.labels_x, &pair.labels_y);

  CellResult out;
  out.alignment = align_spaces(sx, sy, fx, fy, cfg);
  out.transform = fit_transform(pair.x, pair.y, out.alignment.correspondence, cfg.fit);
  const RetrievalResult r = mrr(out.transform.apply(pair.x.data), pair.y.data, pair.ground_truth.assignment);
  out.row.metric = metric;
  out.row.noise = pair.noise_level;
  out.row.anchors = anchors;
  out.row.descriptor = descriptor;
  out.row.mrr = r.mrr;
  out.row.hits_at_1 = r.hits_at_1;
  out.row.similarity = lfm_similarity(out.alignment.refined.C).score;
  out.row.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<BenchRow> noise_benchmark(const BenchGrid& grid, std::uint64_t seed) {
  require(!grid.metrics.empty() && !grid.noise.empty() && !grid.anchors.empty() && !grid.descriptors.empty(),
          "benchmark grid has an empty axis");
  std::vector<SyntheticPair> pairs;
  for (std::size_t li = 0; li < grid.noise.size(); ++li)
    pairs.push_back(synthetic_pair(grid.n, grid.d, grid.noise[li], mix(seed, li)));

  struct Cell {
    std::size_t pair;
    Metric metric;
    Index anchors;
    DescriptorKind descriptor;
  };
  std::vector<Cell> cells;
  for (Metric m : grid.metrics)
    for (std::size_t li = 0; li < grid.noise.size(); ++li)
      for (Index a : grid.anchors)
        for (DescriptorKind dk : grid.descriptors) cells.push_back({li, m, a, dk});

  std::vector<BenchRow> rows(cells.size());
  parallel_for(0, static_cast<Index>(cells.size()), [&](Index i) {
    const Cell& c = cells[i];
    rows[i] = run_cell(pairs[c.pair], c.metric, c.anchors, c.descriptor, grid.pipeline,
                       mix(mix(seed, 0xa2c4ULL), static_cast<std::uint64_t>(c.anchors)))
                  .row;
  });
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out, bool timing) {
  out << "metric,noise,anchors,descriptor,mrr,hits_at_1,similarity,wall_ms\n";
  for (const auto& r : rows) {
    out << to_string(r.metric) << ',' << format_double(r.noise) << ',' << r.anchors << ',' << to_string(r.descriptor)
        << ',' << format_double(r.mrr) << ',' << format_double(r.hits_at_1) << ',' << format_double(r.similarity)
        << ',' << (timing ? format_double(std::round(r.wall_ms * 1000.0) / 1000.0) : std::string("NA")) << '\n';
  }
}

}  // namespace lfm
