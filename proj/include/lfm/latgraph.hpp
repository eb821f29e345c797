#pragma once

#include "lfm/common.hpp"
#include "lfm/embedio.hpp"

#include <optional>
#include <span>
#include <string>

namespace lfm {

enum class Metric { angular, euclidean };

std::string to_string(Metric m);
Metric parse_metric(const std::string& s);

/// Angular distance is arccos(cos(x, y)) / pi, in [0, 1].
double metric_distance(Metric metric, const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y);

/// Dense |A| x |B| distance matrix between the rows of A and the rows of B.
Mat pairwise_distances(Metric metric, const Mat& a, const Mat& b);

/// Rejects zero rows when the metric is angular.
void check_metric_input(Metric metric, const Mat& x);

struct WeightFn {
  enum class Kind { gaussian, binary };
  Kind kind = Kind::gaussian;
  /// Fixed bandwidth; empty means the mean k-th neighbor distance.
  std::optional<double> sigma;
};

struct GraphConfig {
  int k = 16;
  Metric metric = Metric::angular;
  WeightFn weight;

  void validate(Index n) const;
};

/// 300 for n >= 3000, otherwise max(16, ceil(0.1 n)), capped at n - 1.
int default_k(Index n);

/// Symmetric weighted k-NN graph. `weights` and `lengths` share one sparsity
/// pattern; lengths hold the raw metric distance of each edge.
struct LatentGraph {
  GraphConfig config;
  SpMat weights;
  SpMat lengths;
  Vec degrees;
  double sigma = 0.0;       // bandwidth actually used (0 for binary weights)
  int repair_edges = 0;     // edges added to connect components

  Index n() const { return weights.rows(); }
  Index edge_count() const { return weights.nonZeros() / 2; }

  /// Rebuilds weights/lengths/degrees from (i, j, w, len) edges, i != j, each
  /// unordered pair listed once.
  struct Edge {
    Index i, j;
    double weight, length;
  };
  static LatentGraph from_edges(Index n, const std::vector<Edge>& edges, GraphConfig config, double sigma = 0.0,
                                int repair_edges = 0);
  std::vector<Edge> edges() const;  // i < j, lexicographic
};

LatentGraph build_knn_graph(const EmbeddingSet& x, const GraphConfig& cfg);

/// L = I - D^{-1/2} W D^{-1/2}.
SpMat normalized_laplacian(const LatentGraph& g);

/// Shortest-path lengths (edge length = metric distance) from each source to every node.
Mat geodesic_distances(const LatentGraph& g, std::span<const Index> sources);

/// Connected component id per node, ids assigned in order of lowest node index.
std::vector<Index> connected_components(const SpMat& adjacency);

}  // namespace lfm
