#pragma once

#include "lfm/common.hpp"
#include "lfm/descriptors.hpp"
#include "lfm/embedio.hpp"
#include "lfm/fmap.hpp"
#include "lfm/latgraph.hpp"
#include "lfm/spectral.hpp"
#include "lfm/transfer.hpp"

#include <json.hpp>

#include <cstdint>
#include <utility>

namespace lfm {

struct ZoomOutConfig {
  bool enabled = true;
  int step = 5;
  int target = 150;  // final size, clipped to the node count
};

/// Everything a run needs; round-trips through one JSON object.
struct PipelineConfig {
  GraphConfig graph;
  bool auto_k = true;  // use default_k(n) instead of graph.k
  int k_e = 50;        // eigenvectors in the solved (seed) map
  double eig_tol = 1e-8;
  SolverConfig solver;
  ZoomOutConfig zoomout;
  DescriptorKind descriptor = DescriptorKind::anchor_geodesic;
  LinearTransform::Kind fit = LinearTransform::Kind::orthogonal;
  std::uint64_t seed = 0;
  int threads = 0;

  void validate() const;
  int neighbors(Index n) const;
  int zoom_steps(Index n) const;
  /// Eigenvectors to compute: seed size plus ZoomOut growth.
  Index basis_size(Index n) const;

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

nlohmann::json to_json(const GraphConfig& g);
nlohmann::json to_json(const SolverConfig& s);

/// One embedding space with its graph and eigenbasis.
struct SpaceModel {
  EmbeddingSet points;
  LatentGraph graph;
  SpectralBasis basis;
};

SpaceModel build_space(const EmbeddingSet& x, const PipelineConfig& cfg);

/// Paired descriptors. Anchors feed the anchor kinds, labels the indicator kind;
/// spectral kinds share sampling computed on the seed-size basis of X.
std::pair<DescriptorSet, DescriptorSet> make_descriptors(const SpaceModel& sx, const SpaceModel& sy,
                                                         const PipelineConfig& cfg, const AnchorSet* anchors,
                                                         const LabelAssignment* labels_x,
                                                         const LabelAssignment* labels_y);

struct PairAlignment {
  FunctionalMap seed;     // solved map, k_e x k_e
  FunctionalMap refined;  // after ZoomOut (equal to seed when disabled)
  Correspondence correspondence;
  ZoomOutTrace trace;
};

PairAlignment align_spaces(const SpaceModel& sx, const SpaceModel& sy, const DescriptorSet& fx,
                           const DescriptorSet& fy, const PipelineConfig& cfg);

}  // namespace lfm
