#pragma once

#include "lfm/common.hpp"
#include "lfm/correspondence.hpp"
#include "lfm/embedio.hpp"
#include "lfm/fmap.hpp"
#include "lfm/latgraph.hpp"
#include "lfm/spectral.hpp"
#include "lfm/transfer.hpp"

#include <json.hpp>

#include <string>
#include <variant>
#include <vector>

namespace lfm {

using Artifact = std::variant<LatentGraph, SpectralBasis, FunctionalMap, Correspondence, LinearTransform>;

/// Where an artifact came from: input files (hashed on save) and the producing config.
struct Provenance {
  std::vector<fs::path> sources;
  nlohmann::json config = nlohmann::json::object();
};

inline constexpr int kBundleVersion = 1;

/// Writes `dir/meta.json` plus the raw matrix files, each recorded with its SHA-256.
void save_bundle(const Artifact& artifact, const fs::path& dir, const Provenance& provenance = {});
/// Verifies version and checksums before decoding.
Artifact load_bundle(const fs::path& dir);

template <typename T>
T load_bundle_as(const fs::path& dir) {
  Artifact a = load_bundle(dir);
  if (auto* p = std::get_if<T>(&a)) return std::move(*p);
  throw ValidationError(dir.string() + ": bundle holds a different artifact kind");
}

std::string bundle_kind(const Artifact& artifact);
nlohmann::json read_bundle_meta(const fs::path& dir);

std::string sha256_file(const fs::path& path);

/// `src_index,dst_index` rows for the assigned nodes.
void save_correspondence_csv(const Correspondence& c, const fs::path& path);
Correspondence load_correspondence_csv(const fs::path& path, Index n_src, Index n_dst, Correspondence::Source source);

}  // namespace lfm
