#pragma once

#include "lfm/common.hpp"
#include "lfm/embedio.hpp"
#include "lfm/fmap.hpp"
#include "lfm/pipeline.hpp"
#include "lfm/spectral.hpp"

#include <vector>

namespace lfm {

struct SimilarityReport {
  double score = 0.0;
  double offdiag_energy = 0.0;  // ||off(C^T C)||_F^2
  double total_energy = 0.0;    // ||C^T C||_F^2
};

/// 1 - ||off(C^T C)||^2 / ||C^T C||^2. Throws on a zero map.
SimilarityReport lfm_similarity(const Mat& c);

/// Phi_Y v for the leading eigenvector v of C^T C, scaled to unit max |value|.
/// Needs k_X == basis size of Y.
Vec distortion_function(const Mat& c, const SpectralBasis& by);

/// Descriptor source shared by every space in a similarity matrix. The spaces
/// are row-aligned, so the same anchor rows (or per-space labels) apply to all.
struct SharedDescriptors {
  std::vector<Index> anchors;
  std::vector<LabelAssignment> labels;  // one per space for label descriptors
};

struct SimilarityMatrix {
  Mat scores;                     // symmetric m x m
  std::vector<Index> best_match;  // row-wise argmax off the diagonal
  double matching_accuracy = 0.0; // fraction of rows whose best match is their counterpart
};

/// Pairwise scores averaged over both map directions. `counterpart[i]` names the
/// space row i should select (-1 rows are left out of the accuracy).
SimilarityMatrix similarity_matrix(const std::vector<EmbeddingSet>& spaces, const SharedDescriptors& shared,
                                   const PipelineConfig& cfg, const std::vector<Index>& counterpart);

}  // namespace lfm
