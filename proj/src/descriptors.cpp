#include "lfm/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <unordered_set>

namespace lfm {

namespace {

// Smallest and largest eigenvalues above the zero threshold.
std::pair<double, double> positive_range(const SpectralBasis& basis) {
  double lo = 0.0, hi = 0.0;
  for (Index i = 0; i < basis.size(); ++i) {
    const double l = basis.eigenvalues(i);
    if (l <= kZeroEigenvalue) continue;
    if (lo == 0.0) lo = l;
    hi = std::max(hi, l);
  }
  if (lo == 0.0) throw ValidationError("basis has no eigenvalue above " + std::to_string(kZeroEigenvalue));
  return {lo, hi};
}

std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = count == 1 ? a : a + (b - a) * i / (count - 1);
  return out;
}

}  // namespace

std::string to_string(DescriptorKind k) {
  switch (k) {
    case DescriptorKind::anchor_geodesic: return "anchor_geodesic";
    case DescriptorKind::anchor_metric: return "anchor_metric";
    case DescriptorKind::label_indicator: return "label_indicator";
    case DescriptorKind::hks: return "hks";
    case DescriptorKind::wks: return "wks";
  }
  return "unknown";
}

DescriptorKind parse_descriptor_kind(const std::string& s) {
  if (s == "anchor_geodesic" || s == "geodesic") return DescriptorKind::anchor_geodesic;
  if (s == "anchor_metric" || s == "metric") return DescriptorKind::anchor_metric;
  if (s == "label_indicator" || s == "labels" || s == "label") return DescriptorKind::label_indicator;
  if (s == "hks") return DescriptorKind::hks;
  if (s == "wks") return DescriptorKind::wks;
  throw ValidationError("unknown descriptor '" + s + "' (expected geodesic, metric, labels, hks or wks)");
}

void normalize_unit_max(Mat& values) {
  for (Index j = 0; j < values.cols(); ++j) {
    const double m = values.col(j).cwiseAbs().maxCoeff();
    if (m > 0.0) values.col(j) /= m;
  }
}

DescriptorSet anchor_distance_descriptors(const EmbeddingSet& x, const LatentGraph& g, std::span<const Index> anchors,
                                          AnchorMode mode) {
  require(!anchors.empty(), "anchor descriptors need at least one anchor");
  require(x.n() == g.n(), "anchor descriptors: embedding and graph sizes differ");
  for (Index a : anchors)
    require(a >= 0 && a < x.n(), "anchor index " + std::to_string(a) + " out of range [0, " + std::to_string(x.n()) + ")");

  DescriptorSet out;
  out.anchors.assign(anchors.begin(), anchors.end());
  if (mode == AnchorMode::geodesic) {
    out.kind = DescriptorKind::anchor_geodesic;
    out.values = geodesic_distances(g, anchors).transpose();
    if (!out.values.allFinite()) throw ValidationError("anchor geodesics reach unreachable nodes; graph is disconnected");
  } else {
    out.kind = DescriptorKind::anchor_metric;
    Mat pts(anchors.size(), x.d());
    for (std::size_t j = 0; j < anchors.size(); ++j) pts.row(j) = x.data.row(anchors[j]);
    out.values = pairwise_distances(g.config.metric, x.data, pts);
  }
  normalize_unit_max(out.values);
  return out;
}

std::vector<std::string> shared_class_order(const LabelAssignment& a, const LabelAssignment& b) {
  const std::unordered_set<std::string> sa(a.classes.begin(), a.classes.end());
  const std::unordered_set<std::string> sb(b.classes.begin(), b.classes.end());
  for (const auto& c : a.classes)
    if (!sb.count(c)) throw ValidationError("class '" + c + "' appears in the first space only");
  for (const auto& c : b.classes)
    if (!sa.count(c)) throw ValidationError("class '" + c + "' appears in the second space only");
  std::vector<std::string> order = a.classes;
  std::sort(order.begin(), order.end());
  return order;
}

DescriptorSet label_indicator_descriptors(const LabelAssignment& labels, std::span<const std::string> shared_classes) {
  require(!shared_classes.empty(), "label descriptors need a non-empty class list");
  LabelAssignment ordered = labels;
  ordered.classes.assign(shared_classes.begin(), shared_classes.end());
  for (const auto& c : labels.classes)
    if (std::find(shared_classes.begin(), shared_classes.end(), c) == shared_classes.end())
      throw ValidationError("class '" + c + "' is missing from the shared class ordering");
  const auto codes = ordered.codes();

  DescriptorSet out;
  out.kind = DescriptorKind::label_indicator;
  out.classes = ordered.classes;
  out.values = Mat::Zero(labels.n(), static_cast<Index>(shared_classes.size()));
  for (Index i = 0; i < labels.n(); ++i) out.values(i, codes[i]) = 1.0;
  normalize_unit_max(out.values);
  return out;
}

DescriptorSet heat_kernel_signature(const SpectralBasis& basis, std::span<const double> times) {
  require(!times.empty(), "HKS needs at least one time sample");
  for (std::size_t t = 0; t < times.size(); ++t) {
    require(std::isfinite(times[t]) && times[t] >= 0.0, "HKS time must be non-negative, got " + std::to_string(times[t]));
    if (t > 0) require(times[t] >= times[t - 1], "HKS times must be ascending");
  }
  const Mat sq = basis.eigenvectors.cwiseAbs2();
  Mat decay(basis.size(), static_cast<Index>(times.size()));
  for (Index i = 0; i < basis.size(); ++i)
    for (std::size_t t = 0; t < times.size(); ++t) decay(i, t) = std::exp(-basis.eigenvalues(i) * times[t]);
  DescriptorSet out;
  out.kind = DescriptorKind::hks;
  out.samples.assign(times.begin(), times.end());
  out.values = sq * decay;
  normalize_unit_max(out.values);
  return out;
}

std::vector<double> default_hks_times(const SpectralBasis& basis) {
  const auto [lo, hi] = positive_range(basis);
  const double tmin = 4.0 * std::numbers::ln10 / hi;
  const double tmax = 4.0 * std::numbers::ln10 / lo;
  auto logs = linspace(std::log(tmin), std::log(tmax), 16);
  for (auto& v : logs) v = std::exp(v);
  return logs;
}

DescriptorSet wave_kernel_signature(const SpectralBasis& basis, std::span<const double> energies, double variance) {
  require(!energies.empty(), "WKS needs at least one energy sample");
  require(std::isfinite(variance) && variance > 0.0, "WKS variance must be positive");
  std::vector<Index> used;
  for (Index i = 0; i < basis.size(); ++i)
    if (basis.eigenvalues(i) > kZeroEigenvalue) used.push_back(i);
  if (used.empty()) throw ValidationError("WKS: every eigenvalue is below " + std::to_string(kZeroEigenvalue));

  Mat gauss(static_cast<Index>(used.size()), static_cast<Index>(energies.size()));
  for (std::size_t r = 0; r < used.size(); ++r) {
    const double loglam = std::log(basis.eigenvalues(used[r]));
    for (std::size_t e = 0; e < energies.size(); ++e) {
      const double diff = energies[e] - loglam;
      gauss(r, e) = std::exp(-diff * diff / (2.0 * variance));
    }
  }
  Mat sq(basis.n(), static_cast<Index>(used.size()));
  for (std::size_t r = 0; r < used.size(); ++r) sq.col(r) = basis.eigenvectors.col(used[r]).cwiseAbs2();

  DescriptorSet out;
  out.kind = DescriptorKind::wks;
  out.samples.assign(energies.begin(), energies.end());
  out.variance = variance;
  out.values = sq * gauss;
  for (Index e = 0; e < out.values.cols(); ++e) {
    const double norm = gauss.col(e).sum();
    if (norm > 0.0) out.values.col(e) /= norm;
  }
  normalize_unit_max(out.values);
  return out;
}

WksSamples default_wks_samples(const SpectralBasis& basis) {
  const auto [lo, hi] = positive_range(basis);
  WksSamples s;
  s.energies = linspace(std::log(lo), std::log(hi), 16);
  const double spacing = s.energies.size() > 1 ? s.energies[1] - s.energies[0] : 0.0;
  s.variance = spacing > 0.0 ? 7.0 * spacing : 1.0;
  return s;
}

void check_paired(const DescriptorSet& fx, const DescriptorSet& fy) {
  require(fx.kind == fy.kind, "paired descriptors have different kinds: " + to_string(fx.kind) + " vs " +
                                  to_string(fy.kind));
  require(fx.count() == fy.count(), "paired descriptors have " + std::to_string(fx.count()) + " and " +
                                        std::to_string(fy.count()) + " columns");
  require(fx.count() >= 1, "descriptor set is empty");
  if (fx.kind == DescriptorKind::label_indicator)
    require(fx.classes == fy.classes, "label descriptors use different class orderings");
  require(fx.values.allFinite() && fy.values.allFinite(), "descriptor values must be finite");
}

void write_descriptor_csv(const DescriptorSet& f, const EmbeddingSet& x, const fs::path& path) {
  require(f.n() == x.n(), "descriptor rows do not match the embedding set");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError(path.string() + ": cannot open file for writing");
  out << "id";
  for (Index j = 0; j < f.count(); ++j) out << ",f" << j;
  out << '\n';
  for (Index i = 0; i < f.n(); ++i) {
    out << x.ids[i];
    for (Index j = 0; j < f.count(); ++j) out << ',' << format_double(f.values(i, j));
    out << '\n';
  }
}

}  // namespace lfm
