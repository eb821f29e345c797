#include "lfm/latgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace lfm {

namespace {

constexpr Index kRowBlock = 256;

double angular_from_units(const Eigen::Ref<const Vec>& u, const Eigen::Ref<const Vec>& v) {
  // 2 asin(|u - v| / 2) equals arccos(<u, v>) for unit vectors and stays accurate near 0.
  const double chord = (u - v).norm();
  return 2.0 * std::asin(std::min(1.0, 0.5 * chord)) / std::numbers::pi;
}

RowMat unit_rows(const Mat& x) {
  RowMat u = x;
  for (Index i = 0; i < u.rows(); ++i) u.row(i) /= u.row(i).norm();
  return u;
}

}  // namespace

std::string to_string(Metric m) { return m == Metric::angular ? "angular" : "euclidean"; }

Metric parse_metric(const std::string& s) {
  if (s == "angular" || s == "cosine") return Metric::angular;
  if (s == "euclidean" || s == "l2") return Metric::euclidean;
  throw ValidationError("unknown metric '" + s + "' (expected angular or euclidean)");
}

void check_metric_input(Metric metric, const Mat& x) {
  if (metric != Metric::angular) return;
  for (Index i = 0; i < x.rows(); ++i)
    if (x.row(i).squaredNorm() == 0.0)
      throw ValidationError("row " + std::to_string(i) + " is the zero vector, undefined under the angular metric");
}

double metric_distance(Metric metric, const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y) {
  if (metric == Metric::euclidean) return (x - y).norm();
  const double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) throw ValidationError("zero vector is undefined under the angular metric");
  return angular_from_units(x / nx, y / ny);
}

Mat pairwise_distances(Metric metric, const Mat& a, const Mat& b) {
  require(a.cols() == b.cols(), "pairwise_distances: dimension mismatch");
  Mat out(a.rows(), b.rows());
  if (metric == Metric::angular) {
    check_metric_input(metric, a);
    check_metric_input(metric, b);
    const RowMat ua = unit_rows(a), ub = unit_rows(b);
    parallel_for(0, a.rows(), [&](Index i) {
      for (Index j = 0; j < b.rows(); ++j) out(i, j) = angular_from_units(ua.row(i).transpose(), ub.row(j).transpose());
    });
  } else {
    const RowMat ra = a, rb = b;
    parallel_for(0, a.rows(), [&](Index i) {
      for (Index j = 0; j < b.rows(); ++j) out(i, j) = (ra.row(i) - rb.row(j)).norm();
    });
  }
  return out;
}

void GraphConfig::validate(Index n) const {
  require(k >= 1, "graph k must be >= 1, got " + std::to_string(k));
  require(k < n, "graph k = " + std::to_string(k) + " must be smaller than the point count " + std::to_string(n));
  if (weight.sigma) require(std::isfinite(*weight.sigma) && *weight.sigma > 0.0, "fixed sigma must be > 0");
}

int default_k(Index n) {
  const Index k = n >= 3000 ? 300 : std::max<Index>(16, static_cast<Index>(std::ceil(0.1 * static_cast<double>(n))));
  return static_cast<int>(std::max<Index>(1, std::min(k, n - 1)));
}

LatentGraph LatentGraph::from_edges(Index n, const std::vector<Edge>& edges, GraphConfig config, double sigma,
                                    int repair_edges) {
  std::vector<Eigen::Triplet<double>> tw, tl;
  tw.reserve(edges.size() * 2);
  tl.reserve(edges.size() * 2);
  for (const auto& e : edges) {
    require(e.i != e.j && e.i >= 0 && e.j >= 0 && e.i < n && e.j < n, "invalid graph edge");
    require(e.weight > 0.0 && std::isfinite(e.weight), "graph edge weights must be positive and finite");
    tw.emplace_back(e.i, e.j, e.weight);
    tw.emplace_back(e.j, e.i, e.weight);
    tl.emplace_back(e.i, e.j, e.length);
    tl.emplace_back(e.j, e.i, e.length);
  }
  LatentGraph g;
  g.config = config;
  g.sigma = sigma;
  g.repair_edges = repair_edges;
  g.weights.resize(n, n);
  g.lengths.resize(n, n);
  g.weights.setFromTriplets(tw.begin(), tw.end());
  g.lengths.setFromTriplets(tl.begin(), tl.end());
  g.weights.makeCompressed();
  g.lengths.makeCompressed();
  g.degrees = Vec::Zero(n);
  for (Index c = 0; c < n; ++c)
    for (SpMat::InnerIterator it(g.weights, c); it; ++it) g.degrees(c) += it.value();
  return g;
}

std::vector<LatentGraph::Edge> LatentGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (Index c = 0; c < weights.outerSize(); ++c) {
    SpMat::InnerIterator w(weights, c), l(lengths, c);
    for (; w; ++w, ++l)
      if (w.row() < c) out.push_back({w.row(), c, w.value(), l.value()});
  }
  std::sort(out.begin(), out.end(), [](const Edge& a, const Edge& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
  return out;
}

std::vector<Index> connected_components(const SpMat& adjacency) {
  const Index n = adjacency.rows();
  std::vector<Index> comp(n, -1);
  Index next = 0;
  std::vector<Index> stack;
  for (Index s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (SpMat::InnerIterator it(adjacency, u); it; ++it)
        if (comp[it.row()] < 0) {
          comp[it.row()] = next;
          stack.push_back(it.row());
        }
    }
    ++next;
  }
  return comp;
}

LatentGraph build_knn_graph(const EmbeddingSet& x, const GraphConfig& cfg) {
  const Index n = x.n();
  cfg.validate(n);
  check_metric_input(cfg.metric, x.data);
  const Index k = cfg.k;

  // Ranking keys come from a blocked Gram product; only their order matters.
  const RowMat pts = cfg.metric == Metric::angular ? unit_rows(x.data) : RowMat(x.data);
  const Vec sq = pts.rowwise().squaredNorm();
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> nbr(n, k);
  const Index blocks = (n + kRowBlock - 1) / kRowBlock;
  parallel_for(0, blocks, [&](Index b) {
    const Index r0 = b * kRowBlock;
    const Index rows = std::min(kRowBlock, n - r0);
    const RowMat gram = pts.middleRows(r0, rows) * pts.transpose();
    std::vector<Index> cand(n - 1);
    std::vector<double> key(n);
    for (Index r = 0; r < rows; ++r) {
      const Index i = r0 + r;
      for (Index j = 0; j < n; ++j)
        key[j] = cfg.metric == Metric::angular ? -gram(r, j) : sq(j) - 2.0 * gram(r, j);
      Index m = 0;
      for (Index j = 0; j < n; ++j)
        if (j != i) cand[m++] = j;
      auto less = [&](Index a, Index c) { return key[a] < key[c] || (key[a] == key[c] && a < c); };
      std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end(), less);
      std::sort(cand.begin(), cand.begin() + k, less);
      for (Index t = 0; t < k; ++t) nbr(i, t) = cand[t];
    }
  });

  // Bandwidth: mean exact distance to the k-th neighbor.
  double sigma = 0.0;
  if (cfg.weight.kind == WeightFn::Kind::gaussian) {
    if (cfg.weight.sigma) {
      sigma = *cfg.weight.sigma;
    } else {
      Vec kth(n);
      parallel_for(0, n, [&](Index i) {
        kth(i) = metric_distance(cfg.metric, x.data.row(i).transpose(), x.data.row(nbr(i, k - 1)).transpose());
      });
      sigma = kth.mean();
      if (!(sigma > 0.0)) sigma = 1.0;  // every point duplicated: all distances are 0
    }
  }
  auto weight_of = [&](double d) {
    if (cfg.weight.kind == WeightFn::Kind::binary) return 1.0;
    return std::max(std::exp(-(d * d) / (sigma * sigma)), std::numeric_limits<double>::min());
  };

  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(n * k);
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < k; ++t) pairs.emplace_back(std::min(i, nbr(i, t)), std::max(i, nbr(i, t)));
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<LatentGraph::Edge> edges(pairs.size());
  parallel_for(0, static_cast<Index>(pairs.size()), [&](Index e) {
    const auto [i, j] = pairs[e];
    const double d = metric_distance(cfg.metric, x.data.row(i).transpose(), x.data.row(j).transpose());
    edges[e] = {i, j, weight_of(d), d};
  });

  // Connect every minor component to the giant one through its cheapest edge.
  int repairs = 0;
  {
    SpMat adj(n, n);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(edges.size() * 2);
    for (const auto& e : edges) {
      t.emplace_back(e.i, e.j, 1.0);
      t.emplace_back(e.j, e.i, 1.0);
    }
    adj.setFromTriplets(t.begin(), t.end());
    const auto comp = connected_components(adj);
    const Index ncomp = *std::max_element(comp.begin(), comp.end()) + 1;
    if (ncomp > 1) {
      std::vector<std::vector<Index>> members(ncomp);
      for (Index i = 0; i < n; ++i) members[comp[i]].push_back(i);
      Index giant = 0;
      for (Index c = 1; c < ncomp; ++c)
        if (members[c].size() > members[giant].size()) giant = c;
      Mat giant_pts(members[giant].size(), x.d());
      for (std::size_t r = 0; r < members[giant].size(); ++r) giant_pts.row(r) = x.data.row(members[giant][r]);
      for (Index c = 0; c < ncomp; ++c) {
        if (c == giant) continue;
        Mat pts_c(members[c].size(), x.d());
        for (std::size_t r = 0; r < members[c].size(); ++r) pts_c.row(r) = x.data.row(members[c][r]);
        const Mat dist = pairwise_distances(cfg.metric, pts_c, giant_pts);
        Index bi = 0, bj = 0;
        for (Index a = 0; a < dist.rows(); ++a)
          for (Index b = 0; b < dist.cols(); ++b)
            if (dist(a, b) < dist(bi, bj)) bi = a, bj = b;
        const Index i = members[c][bi], j = members[giant][bj];
        const double d = dist(bi, bj);
        edges.push_back({std::min(i, j), std::max(i, j), weight_of(d), d});
        ++repairs;
      }
    }
  }
  return LatentGraph::from_edges(n, edges, cfg, sigma, repairs);
}

SpMat normalized_laplacian(const LatentGraph& g) {
  const Index n = g.n();
  Vec inv_sqrt(n);
  for (Index i = 0; i < n; ++i) {
    if (!(g.degrees(i) > 0.0))
      throw ValidationError("node " + std::to_string(i) + " is isolated; the graph must be connected");
    inv_sqrt(i) = 1.0 / std::sqrt(g.degrees(i));
  }
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(g.weights.nonZeros() + n);
  for (Index i = 0; i < n; ++i) t.emplace_back(i, i, 1.0);
  for (Index c = 0; c < n; ++c)
    for (SpMat::InnerIterator it(g.weights, c); it; ++it)
      t.emplace_back(it.row(), c, -it.value() * (inv_sqrt(it.row()) * inv_sqrt(c)));  // commutative, so exactly symmetric
  SpMat lap(n, n);
  lap.setFromTriplets(t.begin(), t.end());
  lap.makeCompressed();
  return lap;
}

Mat geodesic_distances(const LatentGraph& g, std::span<const Index> sources) {
  require(!sources.empty(), "geodesic_distances: empty source list");
  const Index n = g.n();
  for (Index s : sources)
    require(s >= 0 && s < n, "geodesic source " + std::to_string(s) + " out of range [0, " + std::to_string(n) + ")");
  Mat out(static_cast<Index>(sources.size()), n);
  parallel_for(0, static_cast<Index>(sources.size()), [&](Index r) {
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[sources[r]] = 0.0;
    heap.emplace(0.0, sources[r]);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > dist[u]) continue;
      for (SpMat::InnerIterator it(g.lengths, u); it; ++it) {
        const double nd = du + it.value();
        if (nd < dist[it.row()]) {
          dist[it.row()] = nd;
          heap.emplace(nd, it.row());
        }
      }
    }
    for (Index i = 0; i < n; ++i) out(r, i) = dist[i];
  });
  return out;
}

}  // namespace lfm
