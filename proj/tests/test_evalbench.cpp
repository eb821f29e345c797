#include "helpers.hpp"
#include "lfm/evalbench.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

using namespace lfm;

namespace {

double angular(const Vec& a, const Vec& b) {
  return std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)) / M_PI;
}

// Pearson correlation of average ranks, ranks computed by counting.
double spearman_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] < v[i]) ++less;
        if (v[j] == v[i] && j != i) ++equal;
      }
      r[i] = 1 + less + equal / 2;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("MRR of exact and second-ranked retrieval") {
  const Mat t = testing::gaussian(30, 5, 140);
  std::vector<Index> id(30);
  std::iota(id.begin(), id.end(), 0);
  const RetrievalResult r = mrr(t, t, id);
  CHECK(r.mrr == 1.0);
  CHECK(r.hits_at_1 == 1.0);
  CHECK(r.queries == 30);

  // Query 0 sits on target 1 but its truth is target 0, and vice versa.
  Mat q(2, 2), tg(2, 2);
  tg << 1, 0, 0, 1;
  q << 0.1, 1, 1, 0.1;
  const std::vector<Index> gt{0, 1};
  CHECK(mrr(q, tg, gt).mrr == 0.5);
  CHECK(mrr(q, tg, gt).hits_at_1 == 0.0);
}

TEST_CASE("MRR matches a sort-based oracle, ties going to the lower index") {
  const Mat q = testing::gaussian(40, 6, 141);
  Mat t = testing::gaussian(50, 6, 142);
  t.row(11) = 2.0 * t.row(10);  // same direction: equal angular distance
  std::vector<Index> gt(40);
  for (Index i = 0; i < 40; ++i) gt[i] = (7 * i) % 50;
  gt[0] = 11;
  gt[1] = 10;
  gt[2] = -1;  // skipped
  double sum = 0.0, hits = 0.0;
  Index used = 0;
  for (Index i = 0; i < 40; ++i) {
    if (gt[i] < 0) continue;
    std::vector<Index> order(50);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return angular(q.row(i), t.row(a)) < angular(q.row(i), t.row(b));
    });
    const Index rank = std::find(order.begin(), order.end(), gt[i]) - order.begin() + 1;
    sum += 1.0 / rank;
    hits += rank == 1;
    ++used;
  }
  const RetrievalResult r = mrr(q, t, gt);
  CHECK(r.queries == used);
  CHECK(r.mrr == doctest::Approx(sum / used).epsilon(1e-12));
  CHECK(r.hits_at_1 == doctest::Approx(hits / used));
  CHECK(r.hits_at_1 <= r.mrr);
}

TEST_CASE("MRR input errors") {
  const Mat a = Mat::Ones(3, 2);
  CHECK_THROWS_AS(mrr(a, Mat::Ones(3, 3), std::vector<Index>{0, 1, 2}), ValidationError);
  CHECK_THROWS_AS(mrr(a, a, std::vector<Index>{0, 1}), ValidationError);
  CHECK_THROWS_AS(mrr(a, a, std::vector<Index>{0, 1, 3}), ValidationError);
  CHECK_THROWS_AS(mrr(a, a, std::vector<Index>{-1, -1, -1}), ValidationError);
}

TEST_CASE("synthetic pair structure") {
  const SyntheticPair p = synthetic_pair(500, 16, 0.3, 143);
  const SyntheticPair again = synthetic_pair(500, 16, 0.3, 143);
  CHECK(p.x.data == again.x.data);
  CHECK(p.y.data == again.y.data);
  CHECK(p.ground_truth.assignment == again.ground_truth.assignment);
  CHECK(synthetic_pair(500, 16, 0.3, 144).x.data != p.x.data);

  CHECK(p.ground_truth.total());
  std::set<Index> targets(p.ground_truth.assignment.begin(), p.ground_truth.assignment.end());
  CHECK(targets.size() == 500);
  CHECK(p.y.ids[0] == "y0");
  CHECK(p.labels_x.classes.size() == 10);
  CHECK((p.transform.transpose() * p.transform - Mat::Identity(16, 16)).norm() < 1e-10);

  // sigma_x is the RMS of per-coordinate sample standard deviations.
  const Mat centered = p.x.data.rowwise() - p.x.data.colwise().mean();
  CHECK(p.sigma_x == doctest::Approx(std::sqrt(centered.squaredNorm() / (499.0 * 16.0))).epsilon(1e-6));

  // Residual after undoing permutation and rotation has the requested spread (within 5%).
  Mat resid(500, 16);
  for (Index i = 0; i < 500; ++i) {
    const Index j = p.ground_truth.assignment[i];
    resid.row(i) = p.y.data.row(j) - p.x.data.row(i) * p.transform.transpose();
    CHECK(p.labels_y.labels[j] == p.labels_x.labels[i]);
  }
  const double sd = std::sqrt(resid.squaredNorm() / resid.size());
  CHECK(sd == doctest::Approx(0.3 * p.sigma_x).epsilon(0.05));

  const SyntheticPair clean = synthetic_pair(100, 8, 0.0, 145);
  for (Index i = 0; i < 100; ++i)
    CHECK((clean.y.data.row(clean.ground_truth.assignment[i]) - clean.x.data.row(i) * clean.transform.transpose())
              .norm() < 1e-12);
  CHECK_THROWS_AS(synthetic_pair(5, 8, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(synthetic_pair(100, 8, -0.1, 1), ValidationError);
}

TEST_CASE("anchor sampling") {
  const SyntheticPair p = synthetic_pair(100, 8, 0.0, 146);
  const AnchorSet a = sample_anchors(p.ground_truth, 12, 1);
  CHECK(a.size() == 12);
  CHECK_NOTHROW(a.validate(100, 100));
  for (auto [s, d] : a.pairs) CHECK(p.ground_truth.assignment[s] == d);
  CHECK(sample_anchors(p.ground_truth, 12, 1).pairs == a.pairs);
  CHECK(sample_anchors(p.ground_truth, 12, 2).pairs != a.pairs);
  CHECK_THROWS_AS(sample_anchors(p.ground_truth, 101, 1), ValidationError);
}

TEST_CASE("stitching with a known transform") {
  const SyntheticPair p = synthetic_pair(400, 12, 0.0, 147);
  LinearTransform t;
  t.matrix = p.transform;
  t.offset = Vec::Zero(12);
  LinearTransform bad = t;
  bad.matrix = -p.transform;
  const double good = stitching_accuracy(p.x, t, p.y, p.labels_y, p.labels_x);
  const double wrong = stitching_accuracy(p.x, bad, p.y, p.labels_y, p.labels_x);
  CHECK(good >= 0.95);
  CHECK(wrong < good);
}

TEST_CASE("Spearman with ties") {
  const std::vector<double> a{1, 2, 3, 4, 5, 6}, b{5, 6, 7, 8, 7, 1};
  CHECK(spearman(a, b) == doctest::Approx(spearman_oracle(a, b)).epsilon(1e-12));
  CHECK(spearman(a, a) == doctest::Approx(1.0));
  const std::vector<double> rev{6, 5, 4, 3, 2, 1};
  CHECK(spearman(a, rev) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(spearman(a, std::vector<double>{1, 2}), ValidationError);
}

TEST_CASE("functional-space retrieval beats chance on an isometric pair") {
  const SyntheticPair p = synthetic_pair(300, 16, 0.0, 148);
  PipelineConfig cfg;
  cfg.k_e = 30;
  cfg.zoomout.enabled = false;
  const SpaceModel sx = build_space(p.x, cfg), sy = build_space(p.y, cfg);
  const FunctionalMap c = from_pointwise(sx.basis, sy.basis, p.ground_truth);
  const RetrievalResult r = functional_space_retrieval(c.C, sx, sy, p.ground_truth);
  CHECK(r.queries == 300);
  CHECK(r.mrr > 0.2);  // chance is about 0.02
  CHECK(r.mrr <= 1.0);
}

TEST_CASE("bench grids") {
  CHECK(bench_grid("default").metrics.size() == 2);
  CHECK(bench_grid("default").noise == std::vector<double>{0.0, 0.1, 0.5, 1.0});
  CHECK(bench_grid("ablation").descriptors.size() == 5);
  CHECK_THROWS_AS(bench_grid("huge"), ValidationError);
}

TEST_CASE("quick benchmark is reproducible across runs and thread counts") {
  const BenchGrid g = bench_grid("quick");
  set_num_threads(1);
  const auto a = noise_benchmark(g, 9);
  set_num_threads(3);
  const auto b = noise_benchmark(g, 9);
  set_num_threads(0);
  std::ostringstream sa, sb;
  write_bench_csv(a, sa, false);
  write_bench_csv(b, sb, false);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("metric,noise,anchors,descriptor,mrr,hits_at_1,similarity,wall_ms\n", 0) == 0);
  CHECK(a.size() == 4);
  CHECK(sa.str().find(",NA\n") != std::string::npos);
  for (const auto& r : a) {
    CHECK(r.mrr >= r.hits_at_1);
    if (r.noise == 0.0 && r.metric == Metric::angular) CHECK(r.mrr > 0.9);
  }
}
