#include "lfm/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace lfm {

SimilarityReport lfm_similarity(const Mat& c) {
  require(c.size() > 0 && c.allFinite(), "similarity: map must be non-empty and finite");
  const Mat g = c.transpose() * c;
  SimilarityReport r;
  r.total_energy = g.squaredNorm();
  require(r.total_energy > 0.0, "similarity: map is zero");
  r.offdiag_energy = r.total_energy - g.diagonal().squaredNorm();
  if (r.offdiag_energy < 0.0) r.offdiag_energy = 0.0;
  r.score = std::clamp(1.0 - r.offdiag_energy / r.total_energy, 0.0, 1.0);
  return r;
}

Vec distortion_function(const Mat& c, const SpectralBasis& by) {
  require(c.cols() == by.size(), "distortion: map has " + std::to_string(c.cols()) +
                                     " columns but the target basis has " + std::to_string(by.size()) + " functions");
  require(c.allFinite(), "distortion: map must be finite");
  Eigen::SelfAdjointEigenSolver<Mat> es(c.transpose() * c);
  const Vec v = es.eigenvectors().col(c.cols() - 1);
  Vec f = by.eigenvectors * v;
  const double m = f.cwiseAbs().maxCoeff();
  if (m > 0.0) f /= m;
  canonicalize_sign(f);
  return f;
}

SimilarityMatrix similarity_matrix(const std::vector<EmbeddingSet>& spaces, const SharedDescriptors& shared,
                                   const PipelineConfig& cfg, const std::vector<Index>& counterpart) {
  const Index m = static_cast<Index>(spaces.size());
  require(m >= 2, "similarity matrix needs at least two spaces");
  require(static_cast<Index>(counterpart.size()) == m, "counterpart list must have one entry per space");
  const bool labels = cfg.descriptor == DescriptorKind::label_indicator;
  const bool anchored =
      cfg.descriptor == DescriptorKind::anchor_geodesic || cfg.descriptor == DescriptorKind::anchor_metric;
  if (labels)
    require(static_cast<Index>(shared.labels.size()) == m, "label descriptors need labels for every space");
  if (anchored) {
    require(!shared.anchors.empty(), "anchor descriptors need shared anchors");
    for (const auto& s : spaces)
      for (Index a : shared.anchors)
        require(a >= 0 && a < s.n(), "shared anchor " + std::to_string(a) + " is out of range for a space of " +
                                         std::to_string(s.n()) + " points");
  }

  std::vector<SpaceModel> models(m);
  for (Index i = 0; i < m; ++i) models[i] = build_space(spaces[i], cfg);

  AnchorSet anchors;
  for (Index a : shared.anchors) anchors.pairs.emplace_back(a, a);

  auto score = [&](Index i, Index j) {
    const LabelAssignment* li = labels ? &shared.labels[i] : nullptr;
    const LabelAssignment* lj = labels ? &shared.labels[j] : nullptr;
    const auto [fi, fj] = make_descriptors(models[i], models[j], cfg, anchored ? &anchors : nullptr, li, lj);
    return lfm_similarity(align_spaces(models[i], models[j], fi, fj, cfg).refined.C).score;
  };

  SimilarityMatrix out;
  out.scores = Mat::Zero(m, m);
  std::vector<std::pair<Index, Index>> pairs;
  for (Index i = 0; i < m; ++i)
    for (Index j = i; j < m; ++j) pairs.emplace_back(i, j);
  parallel_for(0, static_cast<Index>(pairs.size()), [&](Index p) {
    const auto [i, j] = pairs[p];
    const double s = i == j ? score(i, i) : 0.5 * (score(i, j) + score(j, i));
    out.scores(i, j) = s;
    out.scores(j, i) = s;
  });

  out.best_match.assign(m, -1);
  Index hits = 0, rows = 0;
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (j == i) continue;
      if (out.best_match[i] < 0 || out.scores(i, j) > out.scores(i, out.best_match[i])) out.best_match[i] = j;
    }
    if (counterpart[i] < 0) continue;
    ++rows;
    hits += out.best_match[i] == counterpart[i];
  }
  out.matching_accuracy = rows > 0 ? static_cast<double>(hits) / static_cast<double>(rows) : 0.0;
  return out;
}

}  // namespace lfm
