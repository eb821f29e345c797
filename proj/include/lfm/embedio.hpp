#pragma once

#include "lfm/common.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace lfm {

namespace fs = std::filesystem;

/// n x d latent vectors, row i identified by ids[i].
struct EmbeddingSet {
  std::vector<std::string> ids;
  Mat data;

  Index n() const { return data.rows(); }
  Index d() const { return data.cols(); }

  /// Wraps a matrix; ids default to the row index as a string.
  static EmbeddingSet from_matrix(Mat data, std::vector<std::string> ids = {});

  /// Throws ValidationError on NaN/Inf, duplicate ids, or empty data.
  void validate() const;
};

/// Known point pairs (src row in X, dst row in Y). Both sides are injective.
struct AnchorSet {
  std::vector<std::pair<Index, Index>> pairs;

  Index size() const { return static_cast<Index>(pairs.size()); }
  std::vector<Index> src() const;
  std::vector<Index> dst() const;

  /// Bounds and injectivity check against the two point counts.
  void validate(Index n_src, Index n_dst) const;
};

/// Per-point class labels; `classes` fixes the column order of indicator descriptors.
struct LabelAssignment {
  std::vector<std::string> labels;
  std::vector<std::string> classes;

  Index n() const { return static_cast<Index>(labels.size()); }
  /// Position of each label in `classes`.
  std::vector<int> codes() const;
  void validate(Index n_points) const;
};

enum class EmbeddingFormat { csv, lfme };
enum class Dtype : std::uint8_t { f32 = 0, f64 = 1 };

EmbeddingFormat parse_embedding_format(const std::string& s);
/// Picks lfme for `.lfme`/`.bin` extensions, csv otherwise.
EmbeddingFormat guess_embedding_format(const fs::path& path);

EmbeddingSet load_embeddings(const fs::path& path, EmbeddingFormat format);
void save_embeddings(const EmbeddingSet& set, const fs::path& path, EmbeddingFormat format,
                     Dtype dtype = Dtype::f64);

// LFME: "LFME" | u32 version | u64 rows | u32 cols | u8 dtype | row-major LE payload.
inline constexpr std::uint32_t kLfmeVersion = 1;
Mat read_lfme(const fs::path& path);
void write_lfme(const Mat& m, const fs::path& path, Dtype dtype = Dtype::f64);

/// Two-column integer CSV `src_index,dst_index`; a non-numeric first line is a header.
AnchorSet load_anchors(const fs::path& path, Index n_src, Index n_dst);
void save_anchors(const AnchorSet& anchors, const fs::path& path);

/// `id,label` CSV matched against the set's ids. Classes are ordered by first appearance.
LabelAssignment load_labels(const fs::path& path, const EmbeddingSet& set);
void save_labels(const LabelAssignment& labels, const EmbeddingSet& set, const fs::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Writes a dense matrix as CSV with the given header (no header if empty).
void write_matrix_csv(const Mat& m, const fs::path& path, const std::vector<std::string>& header = {});

}  // namespace lfm
