#include "lfm/embedio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace lfm {

static_assert(std::endian::native == std::endian::little, "LFME payloads are little-endian");

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  if (ec == std::errc::result_out_of_range) {
    // from_chars rejects denormals and overflow; strtod gives the IEEE answer.
    out = std::strtod(s.c_str(), nullptr);
    return true;
  }
  if (ec != std::errc() || p != e) {
    // from_chars does not accept "inf"/"nan" spelled in every way strtod does.
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return !s.empty() && end == s.c_str() + s.size();
  }
  return true;
}

bool parse_index(const std::string& s, long long& out) {
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), e, out);
  return ec == std::errc() && p == e && !s.empty();
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw ValidationError(path.string() + ": cannot open file for writing");
  return out;
}

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const fs::path& path, const char* field) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw ValidationError(path.string() + ": truncated LFME header at field '" + field + "'");
  return v;
}

EmbeddingSet load_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ":1: missing header");
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "id")
    throw ValidationError(path.string() + ":1: malformed header, expected 'id,c0,...'");
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "c" + std::to_string(j - 1))
      throw ValidationError(path.string() + ":1: malformed header field " + std::to_string(j + 1) + " '" +
                            header[j] + "', expected 'c" + std::to_string(j - 1) + "'");
  }
  const auto d = static_cast<Index>(header.size() - 1);

  std::vector<std::string> ids;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (static_cast<Index>(fields.size()) != d + 1)
      throw ValidationError(where + ": dimension mismatch, expected " + std::to_string(d) + " values, got " +
                            std::to_string(fields.size() - 1));
    ids.push_back(fields[0]);
    for (Index j = 0; j < d; ++j) {
      double v = 0.0;
      if (!parse_double(fields[j + 1], v))
        throw ValidationError(where + ": column c" + std::to_string(j) + " is not a number: '" + fields[j + 1] + "'");
      if (!std::isfinite(v))
        throw ValidationError(where + ": non-finite value in row " + std::to_string(ids.size() - 1) +
                              ", column c" + std::to_string(j));
      values.push_back(v);
    }
  }
  const auto n = static_cast<Index>(ids.size());
  if (n == 0) throw ValidationError(path.string() + ": no data rows");
  EmbeddingSet set;
  set.ids = std::move(ids);
  set.data = Eigen::Map<const RowMat>(values.data(), n, d);
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < set.ids.size(); ++i) {
    auto [it, fresh] = seen.emplace(set.ids[i], i);
    if (!fresh)
      throw ValidationError(path.string() + ":" + std::to_string(i + 2) + ": duplicate id '" + set.ids[i] +
                            "' (first seen on line " + std::to_string(it->second + 2) + ")");
  }
  return set;
}

void save_csv(const EmbeddingSet& set, const fs::path& path) {
  auto out = open_out(path);
  out << "id";
  for (Index j = 0; j < set.d(); ++j) out << ",c" << j;
  out << '\n';
  for (Index i = 0; i < set.n(); ++i) {
    out << set.ids[i];
    for (Index j = 0; j < set.d(); ++j) out << ',' << format_double(set.data(i, j));
    out << '\n';
  }
}

}  // namespace

EmbeddingSet EmbeddingSet::from_matrix(Mat data, std::vector<std::string> ids) {
  EmbeddingSet set;
  if (ids.empty()) {
    ids.reserve(data.rows());
    for (Index i = 0; i < data.rows(); ++i) ids.push_back(std::to_string(i));
  }
  set.ids = std::move(ids);
  set.data = std::move(data);
  set.validate();
  return set;
}

void EmbeddingSet::validate() const {
  require(n() >= 1 && d() >= 1, "embedding set must have at least one row and one column");
  require(static_cast<Index>(ids.size()) == n(),
          "embedding set has " + std::to_string(ids.size()) + " ids for " + std::to_string(n()) + " rows");
  for (Index i = 0; i < n(); ++i)
    for (Index j = 0; j < d(); ++j)
      if (!std::isfinite(data(i, j)))
        throw ValidationError("non-finite value at row " + std::to_string(i) + ", column " + std::to_string(j));
  std::unordered_set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw ValidationError("duplicate id '" + id + "'");
}

std::vector<Index> AnchorSet::src() const {
  std::vector<Index> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.first);
  return out;
}

std::vector<Index> AnchorSet::dst() const {
  std::vector<Index> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.second);
  return out;
}

void AnchorSet::validate(Index n_src, Index n_dst) const {
  std::unordered_set<Index> s, t;
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto [a, b] = pairs[r];
    const std::string where = "anchor " + std::to_string(r);
    if (a < 0 || a >= n_src)
      throw ValidationError(where + ": src index " + std::to_string(a) + " out of range [0, " +
                            std::to_string(n_src) + ")");
    if (b < 0 || b >= n_dst)
      throw ValidationError(where + ": dst index " + std::to_string(b) + " out of range [0, " +
                            std::to_string(n_dst) + ")");
    if (!s.insert(a).second) throw ValidationError(where + ": duplicate src index " + std::to_string(a));
    if (!t.insert(b).second) throw ValidationError(where + ": duplicate dst index " + std::to_string(b));
  }
}

std::vector<int> LabelAssignment::codes() const {
  std::unordered_map<std::string, int> pos;
  for (std::size_t c = 0; c < classes.size(); ++c) pos.emplace(classes[c], static_cast<int>(c));
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    auto it = pos.find(l);
    if (it == pos.end()) throw ValidationError("label '" + l + "' is not in the class list");
    out.push_back(it->second);
  }
  return out;
}

void LabelAssignment::validate(Index n_points) const {
  require(n() == n_points, "label count " + std::to_string(n()) + " does not match point count " +
                               std::to_string(n_points));
  std::unordered_set<std::string> cls(classes.begin(), classes.end());
  require(cls.size() == classes.size(), "class list contains duplicates");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (!cls.count(labels[i]))
      throw ValidationError("point " + std::to_string(i) + ": label '" + labels[i] + "' not in class list");
}

EmbeddingFormat parse_embedding_format(const std::string& s) {
  if (s == "csv") return EmbeddingFormat::csv;
  if (s == "lfme" || s == "lfme-binary" || s == "binary") return EmbeddingFormat::lfme;
  throw ValidationError("unknown embedding format '" + s + "' (expected csv or lfme)");
}

EmbeddingFormat guess_embedding_format(const fs::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".lfme" || ext == ".bin") ? EmbeddingFormat::lfme : EmbeddingFormat::csv;
}

EmbeddingSet load_embeddings(const fs::path& path, EmbeddingFormat format) {
  if (format == EmbeddingFormat::csv) return load_csv(path);
  Mat m = read_lfme(path);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j)))
        throw ValidationError(path.string() + ": non-finite value in row " + std::to_string(i) + ", column " +
                              std::to_string(j));
  require(m.rows() >= 1 && m.cols() >= 1, path.string() + ": empty matrix");
  return EmbeddingSet::from_matrix(std::move(m));
}

void save_embeddings(const EmbeddingSet& set, const fs::path& path, EmbeddingFormat format, Dtype dtype) {
  if (format == EmbeddingFormat::csv)
    save_csv(set, path);
  else
    write_lfme(set.data, path, dtype);
}

Mat read_lfme(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "LFME", 4) != 0)
    throw ValidationError(path.string() + ": bad magic, not an LFME file");
  const auto version = get<std::uint32_t>(in, path, "version");
  if (version != kLfmeVersion)
    throw ValidationError(path.string() + ": unsupported LFME version " + std::to_string(version));
  const auto rows = get<std::uint64_t>(in, path, "n");
  const auto cols = get<std::uint32_t>(in, path, "d");
  const auto dtype = get<std::uint8_t>(in, path, "dtype");
  if (dtype > 1) throw ValidationError(path.string() + ": unknown dtype " + std::to_string(dtype));

  const std::size_t width = dtype == 0 ? 4 : 8;
  const auto header_end = in.tellg();
  in.seekg(0, std::ios::end);
  const auto payload = static_cast<std::uint64_t>(in.tellg() - header_end);
  in.seekg(header_end);
  if (payload != rows * cols * width)
    throw ValidationError(path.string() + ": payload holds " + std::to_string(payload) + " bytes, header n=" +
                          std::to_string(rows) + " d=" + std::to_string(cols) + " requires " +
                          std::to_string(rows * cols * width));

  RowMat m(static_cast<Index>(rows), static_cast<Index>(cols));
  if (dtype == 1) {
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(payload));
  } else {
    std::vector<float> buf(rows * cols);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(payload));
    for (std::size_t i = 0; i < buf.size(); ++i) m.data()[i] = buf[i];
  }
  return m;
}

void write_lfme(const Mat& m, const fs::path& path, Dtype dtype) {
  auto out = open_out(path, std::ios::binary);
  out.write("LFME", 4);
  put<std::uint32_t>(out, kLfmeVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  const RowMat rm = m;
  if (dtype == Dtype::f64) {
    out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * 8));
  } else {
    std::vector<float> buf(rm.size());
    for (Index i = 0; i < rm.size(); ++i) buf[i] = static_cast<float>(rm.data()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  }
  if (!out) throw ValidationError(path.string() + ": write failed");
}

AnchorSet load_anchors(const fs::path& path, Index n_src, Index n_dst) {
  auto in = open_in(path);
  AnchorSet anchors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    long long a = 0, b = 0;
    const bool numeric = f.size() == 2 && parse_index(f[0], a) && parse_index(f[1], b);
    if (!numeric) {
      if (line_no == 1 && f.size() == 2) continue;  // header
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": expected two integer columns 'src_index,dst_index'");
    }
    anchors.pairs.emplace_back(a, b);
    try {
      AnchorSet one;
      one.pairs = {anchors.pairs.back()};
      one.validate(n_src, n_dst);
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  try {
    anchors.validate(n_src, n_dst);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return anchors;
}

void save_anchors(const AnchorSet& anchors, const fs::path& path) {
  auto out = open_out(path);
  out << "src_index,dst_index\n";
  for (const auto& [a, b] : anchors.pairs) out << a << ',' << b << '\n';
}

LabelAssignment load_labels(const fs::path& path, const EmbeddingSet& set) {
  auto in = open_in(path);
  std::unordered_map<std::string, Index> row_of;
  for (Index i = 0; i < set.n(); ++i) row_of.emplace(set.ids[i], i);

  LabelAssignment out;
  out.labels.assign(set.n(), {});
  std::vector<bool> seen(set.n(), false);
  std::unordered_set<std::string> cls;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 2) throw ValidationError(where + ": expected 'id,label'");
    if (line_no == 1 && f[0] == "id" && f[1] == "label") continue;
    auto it = row_of.find(f[0]);
    if (it == row_of.end()) throw ValidationError(where + ": unknown id '" + f[0] + "'");
    if (seen[it->second]) throw ValidationError(where + ": duplicate label for id '" + f[0] + "'");
    seen[it->second] = true;
    out.labels[it->second] = f[1];
    if (cls.insert(f[1]).second) out.classes.push_back(f[1]);
  }
  for (Index i = 0; i < set.n(); ++i)
    if (!seen[i]) throw ValidationError(path.string() + ": no label for id '" + set.ids[i] + "'");
  return out;
}

void save_labels(const LabelAssignment& labels, const EmbeddingSet& set, const fs::path& path) {
  labels.validate(set.n());
  auto out = open_out(path);
  out << "id,label\n";
  for (Index i = 0; i < set.n(); ++i) out << set.ids[i] << ',' << labels.labels[i] << '\n';
}

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

void write_matrix_csv(const Mat& m, const fs::path& path, const std::vector<std::string>& header) {
  auto out = open_out(path);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  if (!header.empty()) out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

}  // namespace lfm
