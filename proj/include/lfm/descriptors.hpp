#pragma once

#include "lfm/common.hpp"
#include "lfm/embedio.hpp"
#include "lfm/latgraph.hpp"
#include "lfm/spectral.hpp"

#include <span>
#include <string>
#include <vector>

namespace lfm {

enum class DescriptorKind { anchor_geodesic, anchor_metric, label_indicator, hks, wks };

std::string to_string(DescriptorKind k);
DescriptorKind parse_descriptor_kind(const std::string& s);

/// Node functions that the unknown correspondence should (approximately) preserve.
/// Every column is scaled to unit max absolute value.
struct DescriptorSet {
  Mat values;  // n x n_f
  DescriptorKind kind = DescriptorKind::anchor_geodesic;
  std::vector<Index> anchors;        // anchor kinds: node per column
  std::vector<std::string> classes;  // label kind: class per column
  std::vector<double> samples;       // hks times / wks energies
  double variance = 0.0;             // wks only

  Index n() const { return values.rows(); }
  Index count() const { return values.cols(); }
};

enum class AnchorMode { geodesic, metric };

DescriptorSet anchor_distance_descriptors(const EmbeddingSet& x, const LatentGraph& g, std::span<const Index> anchors,
                                          AnchorMode mode);

/// One indicator column per class of `shared_classes`, in that order.
DescriptorSet label_indicator_descriptors(const LabelAssignment& labels, std::span<const std::string> shared_classes);

/// Class ordering common to two assignments; throws if either side has a class
/// the other lacks.
std::vector<std::string> shared_class_order(const LabelAssignment& a, const LabelAssignment& b);

DescriptorSet heat_kernel_signature(const SpectralBasis& basis, std::span<const double> times);
/// 16 log-spaced times over [4 ln10 / lambda_max, 4 ln10 / lambda_min_positive].
std::vector<double> default_hks_times(const SpectralBasis& basis);

DescriptorSet wave_kernel_signature(const SpectralBasis& basis, std::span<const double> energies, double variance);
struct WksSamples {
  std::vector<double> energies;
  double variance = 0.0;
};
/// 16 energies over [log lambda_min_positive, log lambda_max], variance 7 * spacing.
WksSamples default_wks_samples(const SpectralBasis& basis);

/// Eigenvalues at or below this are skipped by the WKS and by default sampling ranges.
inline constexpr double kZeroEigenvalue = 1e-12;

/// Divides each column by its max absolute value (all-zero columns untouched).
void normalize_unit_max(Mat& values);

/// Throws unless both sets have the same kind and column count.
void check_paired(const DescriptorSet& fx, const DescriptorSet& fy);

void write_descriptor_csv(const DescriptorSet& f, const EmbeddingSet& x, const fs::path& path);

}  // namespace lfm
