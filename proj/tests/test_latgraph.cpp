#include "helpers.hpp"
#include "lfm/latgraph.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

using namespace lfm;

namespace {

EmbeddingSet points_1d(std::vector<double> xs) {
  Mat m(static_cast<Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) m(i, 0) = xs[i];
  return EmbeddingSet::from_matrix(m);
}

double angular(const Vec& a, const Vec& b) {
  const double c = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
  return std::acos(c) / M_PI;
}

Index neighbor_count(const SpMat& w, Index col) {
  Index c = 0;
  for (SpMat::InnerIterator it(w, col); it; ++it) ++c;
  return c;
}

}  // namespace

TEST_CASE("default neighbor count") {
  CHECK(default_k(3000) == 300);
  CHECK(default_k(20000) == 300);
  CHECK(default_k(2999) == 300);
  CHECK(default_k(500) == 50);
  CHECK(default_k(101) == 16);
  CHECK(default_k(1000) == 100);
  CHECK(default_k(10) == 9);
}

TEST_CASE("collinear points with k=1 and binary weights") {
  GraphConfig cfg;
  cfg.k = 1;
  cfg.metric = Metric::euclidean;
  cfg.weight.kind = WeightFn::Kind::binary;
  const LatentGraph g = build_knn_graph(points_1d({0, 1, 3, 7}), cfg);
  Mat expected = Mat::Zero(4, 4);
  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}}) expected(i, j) = expected(j, i) = 1.0;
  CHECK(Mat(g.weights) == expected);
  CHECK(g.lengths.coeff(2, 3) == 4.0);
  CHECK(g.degrees == Vec((Vec(4) << 1, 2, 2, 1).finished()));
  CHECK(g.repair_edges == 0);
  CHECK(g.edge_count() == 3);
}

TEST_CASE("disconnected clusters are joined through their cheapest edge") {
  GraphConfig cfg;
  cfg.k = 1;
  cfg.metric = Metric::euclidean;
  cfg.weight.kind = WeightFn::Kind::binary;
  const LatentGraph g = build_knn_graph(points_1d({0, 1, 100, 101, 250}), cfg);
  CHECK(g.repair_edges == 1);  // 250 attaches to 101 on its own
  CHECK(g.lengths.coeff(1, 2) == 99.0);
  CHECK(g.lengths.coeff(3, 4) == 149.0);
  const auto comp = connected_components(g.weights);
  CHECK(std::all_of(comp.begin(), comp.end(), [](Index c) { return c == 0; }));
}

TEST_CASE("k-NN union graph matches a brute-force oracle") {
  const Mat x = testing::gaussian(10, 3, 7);
  const int k = 3;
  GraphConfig cfg;
  cfg.k = k;
  const LatentGraph g = build_knn_graph(EmbeddingSet::from_matrix(x), cfg);
  REQUIRE(g.repair_edges == 0);

  Mat d(10, 10);
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 10; ++j) d(i, j) = angular(x.row(i), x.row(j));
  std::set<std::pair<Index, Index>> edges;
  double kth = 0.0;
  for (Index i = 0; i < 10; ++i) {
    std::vector<Index> o;
    for (Index j = 0; j < 10; ++j)
      if (j != i) o.push_back(j);
    std::sort(o.begin(), o.end(), [&](Index a, Index b) { return d(i, a) < d(i, b); });
    for (int t = 0; t < k; ++t) edges.emplace(std::min(i, o[t]), std::max(i, o[t]));
    kth += d(i, o[k - 1]) / 10.0;
  }
  CHECK(g.sigma == doctest::Approx(kth).epsilon(1e-12));
  CHECK(g.edge_count() == static_cast<Index>(edges.size()));
  for (auto [i, j] : edges) {
    CHECK(g.weights.coeff(i, j) == doctest::Approx(std::exp(-d(i, j) * d(i, j) / (kth * kth))).epsilon(1e-12));
    CHECK(g.weights.coeff(j, i) == g.weights.coeff(i, j));
    CHECK(g.lengths.coeff(i, j) == doctest::Approx(d(i, j)).epsilon(1e-12));
  }
}

TEST_CASE("P3 normalized Laplacian") {
  const LatentGraph g = LatentGraph::from_edges(3, {{0, 1, 1.0, 1.0}, {1, 2, 1.0, 1.0}}, GraphConfig{});
  const Mat l = Mat(normalized_laplacian(g));
  const double h = 1.0 / std::sqrt(2.0);
  Mat expected(3, 3);
  expected << 1, -h, 0, -h, 1, -h, 0, -h, 1;
  CHECK((l - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("Laplacian is symmetric PSD with spectrum in [0, 2]") {
  GraphConfig cfg;
  cfg.k = 8;
  const LatentGraph g = build_knn_graph(EmbeddingSet::from_matrix(testing::gaussian(80, 5, 8)), cfg);
  const Mat l = Mat(normalized_laplacian(g));
  CHECK((l - l.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Mat> es(l);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
  CHECK(es.eigenvalues().maxCoeff() < 2.0 + 1e-12);
  // D^{1/2} 1 spans the null space of a connected graph.
  const Vec s = g.degrees.cwiseSqrt();
  CHECK((l * s).norm() < 1e-12 * s.norm());
}

TEST_CASE("angular graph ignores per-row scaling") {
  Mat x = testing::gaussian(40, 6, 9);
  Mat y = x;
  const Mat s = testing::gaussian(40, 1, 10).cwiseAbs().array() + 0.1;
  for (Index i = 0; i < 40; ++i) y.row(i) *= s(i, 0);
  GraphConfig cfg;
  cfg.k = 5;
  const LatentGraph a = build_knn_graph(EmbeddingSet::from_matrix(x), cfg);
  const LatentGraph b = build_knn_graph(EmbeddingSet::from_matrix(y), cfg);
  CHECK((Mat(a.weights) - Mat(b.weights)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gaussian weights decrease with edge length") {
  GraphConfig cfg;
  cfg.k = 6;
  cfg.metric = Metric::euclidean;
  const LatentGraph g = build_knn_graph(EmbeddingSet::from_matrix(testing::gaussian(60, 4, 11)), cfg);
  auto e = g.edges();
  std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return a.length < b.length; });
  for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i].weight <= e[i - 1].weight);
}

TEST_CASE("geodesics agree with Floyd-Warshall") {
  GraphConfig cfg;
  cfg.k = 3;
  cfg.metric = Metric::euclidean;
  const LatentGraph g = build_knn_graph(EmbeddingSet::from_matrix(testing::gaussian(25, 2, 12)), cfg);
  const Index n = g.n();
  Mat fw = Mat::Constant(n, n, std::numeric_limits<double>::infinity());
  for (Index i = 0; i < n; ++i) fw(i, i) = 0.0;
  for (const auto& e : g.edges()) fw(e.i, e.j) = fw(e.j, e.i) = e.length;
  for (Index m = 0; m < n; ++m)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) fw(i, j) = std::min(fw(i, j), fw(i, m) + fw(m, j));
  const std::vector<Index> src{0, 7, 24};
  const Mat gd = geodesic_distances(g, src);
  for (std::size_t r = 0; r < src.size(); ++r)
    for (Index j = 0; j < n; ++j) CHECK(gd(r, j) == doctest::Approx(fw(src[r], j)).epsilon(1e-12));
}

TEST_CASE("geodesics on a chain are cumulative lengths") {
  std::vector<LatentGraph::Edge> e;
  for (Index i = 0; i + 1 < 6; ++i) e.push_back({i, i + 1, 1.0, 0.5 * (i + 1)});
  const LatentGraph g = LatentGraph::from_edges(6, e, GraphConfig{});
  const std::vector<Index> src{0};
  const Mat gd = geodesic_distances(g, src);
  CHECK(gd(0, 5) == doctest::Approx(0.5 + 1.0 + 1.5 + 2.0 + 2.5));
  CHECK(gd(0, 0) == 0.0);
  CHECK_THROWS_AS(geodesic_distances(g, std::span<const Index>{}), ValidationError);
  const std::vector<Index> bad{6};
  CHECK_THROWS_AS(geodesic_distances(g, bad), ValidationError);
}

TEST_CASE("invalid inputs") {
  GraphConfig cfg;
  cfg.k = 5;
  CHECK_THROWS_AS(build_knn_graph(EmbeddingSet::from_matrix(Mat::Ones(5, 2)), cfg), ValidationError);  // k >= n
  Mat z = testing::gaussian(10, 3, 13);
  z.row(4).setZero();
  CHECK_THROWS_WITH_AS(build_knn_graph(EmbeddingSet::from_matrix(z), cfg), doctest::Contains("row 4"),
                       ValidationError);
  cfg.weight.sigma = -1.0;
  CHECK_THROWS_AS(build_knn_graph(EmbeddingSet::from_matrix(testing::gaussian(10, 3, 14)), cfg), ValidationError);
  CHECK_THROWS_AS(parse_metric("cosine-ish"), ValidationError);
}

TEST_CASE("3000 points with k=300 give every node at least 300 neighbors") {
  GraphConfig cfg;
  cfg.k = default_k(3000);
  const LatentGraph g = build_knn_graph(EmbeddingSet::from_matrix(testing::gaussian(3000, 16, 15)), cfg);
  Index fewest = g.n();
  for (Index c = 0; c < g.n(); ++c) fewest = std::min(fewest, neighbor_count(g.weights, c));
  CHECK(fewest >= 300);
  CHECK(g.degrees.minCoeff() > 0.0);
}
