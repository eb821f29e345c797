#pragma once

#include "lfm/common.hpp"
#include "lfm/correspondence.hpp"
#include "lfm/embedio.hpp"
#include "lfm/pipeline.hpp"
#include "lfm/transfer.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lfm {

struct RetrievalResult {
  double mrr = 0.0;
  double hits_at_1 = 0.0;
  Index queries = 0;
};

/// Angular-distance ranking of every target for each query row. Rank of the
/// true target = 1 + strictly closer targets + equally close ones with a lower
/// index. Queries with ground truth -1 are skipped.
RetrievalResult mrr(const Mat& queries, const Mat& targets, std::span<const Index> ground_truth);
RetrievalResult mrr(const EmbeddingSet& queries, const EmbeddingSet& targets, const Correspondence& ground_truth);

struct SyntheticPair {
  EmbeddingSet x, y;
  Correspondence ground_truth;  // x row i <-> y row ground_truth[i]
  Mat transform;                // Q, Y = permute(X) Q^T + noise
  double noise_level = 0.0;
  double sigma_x = 0.0;         // RMS per-coordinate std of X
  LabelAssignment labels_x, labels_y;
};

/// X is a 10-component Gaussian mixture (unit per-coordinate spread, means at
/// least 4 apart); Y rows are a seeded permutation of X, rotated by a Haar
/// orthogonal Q, plus noise_level * sigma_x Gaussian noise.
SyntheticPair synthetic_pair(Index n, Index d, double noise_level, std::uint64_t seed, int components = 10);

/// Nearest-centroid classifier fit on (y_train, y_labels), evaluated on transform(x_test).
double stitching_accuracy(const EmbeddingSet& x_test, const LinearTransform& transform, const EmbeddingSet& y_train,
                          const LabelAssignment& y_labels, const LabelAssignment& x_labels);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

/// "LFM space" retrieval: every X point becomes its distance function over the X
/// nodes, is projected, pushed through C, and ranked against the Y points'
/// projected distance functions.
RetrievalResult functional_space_retrieval(const Mat& c, const SpaceModel& sx, const SpaceModel& sy,
                                           const Correspondence& ground_truth);

/// Random anchors: `count` distinct X rows paired with their ground-truth targets.
AnchorSet sample_anchors(const Correspondence& ground_truth, Index count, std::uint64_t seed);

struct BenchGrid {
  std::string name;
  Index n = 1000;
  Index d = 64;
  std::vector<Metric> metrics;
  std::vector<double> noise;
  std::vector<Index> anchors;
  std::vector<DescriptorKind> descriptors;
  PipelineConfig pipeline;  // k, k_e, zoomout and solver settings shared by every cell
};

/// "default" (metric x noise), "ablation" (descriptor kinds at noise 0.1), "quick".
BenchGrid bench_grid(const std::string& name);

struct BenchRow {
  Metric metric = Metric::angular;
  double noise = 0.0;
  Index anchors = 0;
  DescriptorKind descriptor = DescriptorKind::anchor_geodesic;
  double mrr = 0.0;
  double hits_at_1 = 0.0;
  double similarity = 0.0;
  double wall_ms = 0.0;
};

struct CellResult {
  BenchRow row;
  PairAlignment alignment;
  LinearTransform transform;
};

/// Full pipeline on one synthetic pair: graphs, bases, descriptors, solve,
/// ZoomOut, extraction, fit, retrieval. Similarity is taken on the refined map.
CellResult run_cell(const SyntheticPair& pair, Metric metric, Index anchors, DescriptorKind descriptor,
                    const PipelineConfig& cfg, std::uint64_t anchor_seed);

/// Every cell of the grid; the pair for a noise level depends only on seed and level.
std::vector<BenchRow> noise_benchmark(const BenchGrid& grid, std::uint64_t seed);

/// Columns metric,noise,anchors,descriptor,mrr,hits_at_1,similarity,wall_ms;
/// wall_ms is written as NA unless `timing` is set, keeping output reproducible.
void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out, bool timing);

}  // namespace lfm
