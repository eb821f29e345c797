#include "lfm/bundle.hpp"
#include "lfm/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lfm {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "lfm-bundle";

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(path.string() + ": cannot open file for writing");
  out << text;
}

double parse_number(const std::string& s, const fs::path& path, std::size_t line, const char* field) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError(path.string() + ":" + std::to_string(line) + ": field '" + field + "' is not a number: '" +
                          s + "'");
  return v;
}

long long parse_integer(const std::string& s, const fs::path& path, std::size_t line, const char* field) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError(path.string() + ":" + std::to_string(line) + ": field '" + field +
                          "' is not an integer: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> lines_of(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// Nonzeros of a sparse matrix as rows (i, j, value), sorted lexicographically.
Mat triplets(const SpMat& m) {
  std::vector<std::tuple<Index, Index, double>> t;
  t.reserve(m.nonZeros());
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SpMat::InnerIterator it(m, c); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  std::sort(t.begin(), t.end());
  Mat out(static_cast<Index>(t.size()), 3);
  for (std::size_t r = 0; r < t.size(); ++r) {
    out(r, 0) = static_cast<double>(std::get<0>(t[r]));
    out(r, 1) = static_cast<double>(std::get<1>(t[r]));
    out(r, 2) = std::get<2>(t[r]);
  }
  return out;
}

SpMat from_triplets(const Mat& t, Index n, const std::string& what) {
  require(t.cols() == 3, what + ": expected 3 columns (i, j, value)");
  std::vector<Eigen::Triplet<double>> list;
  list.reserve(t.rows());
  for (Index r = 0; r < t.rows(); ++r) {
    const double i = t(r, 0), j = t(r, 1);
    require(i >= 0 && j >= 0 && i < n && j < n && i == std::floor(i) && j == std::floor(j),
            what + ": row " + std::to_string(r) + " has an invalid index");
    list.emplace_back(static_cast<Index>(i), static_cast<Index>(j), t(r, 2));
  }
  SpMat m(n, n);
  m.setFromTriplets(list.begin(), list.end());
  m.makeCompressed();
  return m;
}

json solver_json(const FunctionalMap& m) {
  return {{"config", to_json(m.solver)},
          {"method", m.info.method},
          {"iterations", m.info.iterations},
          {"gradient_norm", m.info.gradient_norm},
          {"rank_deficient", m.info.rank_deficient},
          {"objective",
           {{"data", m.terms.data},
            {"laplacian", m.terms.laplacian},
            {"descriptor", m.terms.descriptor},
            {"total", m.terms.total}}}};
}

template <typename T>
T get(const json& j, const char* key, const fs::path& meta) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(meta.string() + ": missing or invalid field '" + key + "'");
  }
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  const std::string data = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed for " + path.string());
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string bundle_kind(const Artifact& artifact) {
  switch (artifact.index()) {
    case 0: return "graph";
    case 1: return "basis";
    case 2: return "map";
    case 3: return "correspondence";
    case 4: return "transform";
  }
  return "unknown";
}

void save_correspondence_csv(const Correspondence& c, const fs::path& path) {
  std::ostringstream out;
  out << "src_index,dst_index\n";
  for (Index i = 0; i < c.n(); ++i)
    if (c.assignment[i] >= 0) out << i << ',' << c.assignment[i] << '\n';
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text(path, out.str());
}

Correspondence load_correspondence_csv(const fs::path& path, Index n_src, Index n_dst,
                                       Correspondence::Source source) {
  Correspondence c;
  c.source = source;
  c.n_target = n_dst;
  c.assignment.assign(n_src, -1);
  const auto lines = lines_of(path);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto cells = split(lines[ln]);
    if (ln == 0 && !cells.empty() && !cells[0].empty() && !std::isdigit(static_cast<unsigned char>(cells[0][0])))
      continue;  // header
    if (cells.size() != 2)
      throw ValidationError(path.string() + ":" + std::to_string(ln + 1) + ": expected 2 fields, found " +
                            std::to_string(cells.size()));
    const long long s = parse_integer(cells[0], path, ln + 1, "src_index");
    const long long d = parse_integer(cells[1], path, ln + 1, "dst_index");
    if (s < 0 || s >= n_src)
      throw ValidationError(path.string() + ":" + std::to_string(ln + 1) + ": src_index " + std::to_string(s) +
                            " out of range [0, " + std::to_string(n_src) + ")");
    if (d < 0 || d >= n_dst)
      throw ValidationError(path.string() + ":" + std::to_string(ln + 1) + ": dst_index " + std::to_string(d) +
                            " out of range [0, " + std::to_string(n_dst) + ")");
    if (c.assignment[s] >= 0)
      throw ValidationError(path.string() + ":" + std::to_string(ln + 1) + ": src_index " + std::to_string(s) +
                            " assigned twice");
    c.assignment[s] = d;
  }
  return c;
}

void save_bundle(const Artifact& artifact, const fs::path& dir, const Provenance& provenance) {
  fs::create_directories(dir);
  json meta;
  meta["format"] = kFormat;
  meta["version"] = kBundleVersion;
  meta["kind"] = bundle_kind(artifact);
  json sources = json::array();
  for (const auto& s : provenance.sources) sources.push_back({{"path", s.string()}, {"sha256", sha256_file(s)}});
  meta["provenance"] = {{"sources", sources}, {"config", provenance.config}};
  std::vector<std::string> files;

  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, LatentGraph>) {
          meta["n"] = a.n();
          meta["graph_config"] = to_json(a.config);
          meta["sigma"] = a.sigma;
          meta["repair_edges"] = a.repair_edges;
          write_lfme(triplets(a.weights), dir / "weights.lfme");
          write_lfme(triplets(a.lengths), dir / "lengths.lfme");
          write_lfme(a.degrees, dir / "degrees.lfme");
          files = {"weights.lfme", "lengths.lfme", "degrees.lfme"};
        } else if constexpr (std::is_same_v<T, SpectralBasis>) {
          a.validate();
          std::ostringstream csv;
          csv << "index,eigenvalue,residual\n";
          for (Index i = 0; i < a.size(); ++i)
            csv << i << ',' << format_double(a.eigenvalues(i)) << ',' << format_double(a.residuals(i)) << '\n';
          write_text(dir / "eigenvalues.csv", csv.str());
          write_lfme(a.eigenvectors, dir / "eigenvectors.lfme");
          meta["n"] = a.n();
          meta["size"] = a.size();
          files = {"eigenvalues.csv", "eigenvectors.lfme"};
        } else if constexpr (std::is_same_v<T, FunctionalMap>) {
          require(a.C.size() > 0 && a.C.allFinite(), "functional map must be non-empty and finite");
          write_lfme(a.C, dir / "C.lfme");
          meta["k_x"] = a.k_x();
          meta["k_y"] = a.k_y();
          meta["map_provenance"] = to_string(a.provenance);
          meta["descriptor_kinds"] = a.descriptor_kinds;
          meta["refine_steps"] = a.refine_steps;
          meta["solver"] = solver_json(a);
          meta["objective_history"] = a.info.history;
          files = {"C.lfme"};
        } else if constexpr (std::is_same_v<T, Correspondence>) {
          a.validate(false);
          save_correspondence_csv(a, dir / "correspondence.csv");
          meta["n_source"] = a.n();
          meta["n_target"] = a.n_target;
          meta["source"] = to_string(a.source);
          files = {"correspondence.csv"};
        } else {
          write_lfme(a.matrix, dir / "matrix.lfme");
          write_lfme(a.offset, dir / "offset.lfme");
          meta["transform_kind"] = to_string(a.kind);
          files = {"matrix.lfme", "offset.lfme"};
        }
      },
      artifact);

  json checksums = json::object();
  for (const auto& f : files) checksums[f] = sha256_file(dir / f);
  meta["checksums"] = checksums;
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

json read_bundle_meta(const fs::path& dir) {
  const fs::path path = dir / "meta.json";
  require(fs::exists(path), dir.string() + ": not a bundle (meta.json missing)");
  json meta;
  try {
    meta = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  require(meta.is_object() && meta.value("format", "") == kFormat, path.string() + ": not an lfm bundle");
  const int version = get<int>(meta, "version", path);
  require(version == kBundleVersion, path.string() + ": bundle version mismatch (found " + std::to_string(version) +
                                         ", expected " + std::to_string(kBundleVersion) + ")");
  return meta;
}

Artifact load_bundle(const fs::path& dir) {
  const json meta = read_bundle_meta(dir);
  const fs::path mpath = dir / "meta.json";
  require(meta.contains("checksums") && meta.at("checksums").is_object(), mpath.string() + ": missing checksums");
  for (const auto& [file, sum] : meta.at("checksums").items()) {
    require(fs::exists(dir / file), dir.string() + ": bundle file '" + file + "' is missing");
    require(sum.is_string() && sum.get<std::string>() == sha256_file(dir / file),
            dir.string() + ": checksum failure for '" + file + "'");
  }
  auto need = [&](const char* f) {
    require(meta.at("checksums").contains(f), mpath.string() + ": no checksum recorded for '" + f + "'");
    return dir / f;
  };
  const std::string kind = get<std::string>(meta, "kind", mpath);

  if (kind == "graph") {
    const Index n = get<Index>(meta, "n", mpath);
    LatentGraph g;
    const json& gc = meta.at("graph_config");
    g.config.k = get<int>(gc, "k", mpath);
    g.config.metric = parse_metric(get<std::string>(gc, "metric", mpath));
    const json& w = gc.at("weight");
    g.config.weight.kind =
        get<std::string>(w, "kind", mpath) == "binary" ? WeightFn::Kind::binary : WeightFn::Kind::gaussian;
    if (w.contains("sigma") && w.at("sigma").is_number()) g.config.weight.sigma = w.at("sigma").get<double>();
    g.sigma = get<double>(meta, "sigma", mpath);
    g.repair_edges = get<int>(meta, "repair_edges", mpath);
    g.weights = from_triplets(read_lfme(need("weights.lfme")), n, "weights.lfme");
    g.lengths = from_triplets(read_lfme(need("lengths.lfme")), n, "lengths.lfme");
    const Mat deg = read_lfme(need("degrees.lfme"));
    require(deg.rows() == n && deg.cols() == 1, "degrees.lfme has the wrong shape");
    g.degrees = deg.col(0);
    return g;
  }
  if (kind == "basis") {
    SpectralBasis b;
    b.eigenvectors = read_lfme(need("eigenvectors.lfme"));
    const fs::path csv = need("eigenvalues.csv");
    const auto lines = lines_of(csv);
    require(!lines.empty() && lines[0] == "index,eigenvalue,residual", csv.string() + ":1: unexpected header");
    std::vector<double> vals, res;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
      if (lines[ln].empty()) continue;
      const auto cells = split(lines[ln]);
      if (cells.size() != 3)
        throw ValidationError(csv.string() + ":" + std::to_string(ln + 1) + ": expected 3 fields");
      require(parse_integer(cells[0], csv, ln + 1, "index") == static_cast<long long>(vals.size()),
              csv.string() + ":" + std::to_string(ln + 1) + ": indices must be consecutive from 0");
      vals.push_back(parse_number(cells[1], csv, ln + 1, "eigenvalue"));
      res.push_back(parse_number(cells[2], csv, ln + 1, "residual"));
    }
    b.eigenvalues = Eigen::Map<const Vec>(vals.data(), static_cast<Index>(vals.size()));
    b.residuals = Eigen::Map<const Vec>(res.data(), static_cast<Index>(res.size()));
    b.validate();
    return b;
  }
  if (kind == "map") {
    FunctionalMap m;
    m.C = read_lfme(need("C.lfme"));
    require(m.k_x() == get<Index>(meta, "k_x", mpath) && m.k_y() == get<Index>(meta, "k_y", mpath),
            mpath.string() + ": map shape disagrees with C.lfme");
    m.provenance = parse_provenance(get<std::string>(meta, "map_provenance", mpath));
    m.descriptor_kinds = get<std::vector<std::string>>(meta, "descriptor_kinds", mpath);
    m.refine_steps = get<int>(meta, "refine_steps", mpath);
    const json& s = meta.at("solver");
    const json& sc = s.at("config");
    m.solver.alpha = get<double>(sc, "alpha", mpath);
    m.solver.beta = get<double>(sc, "beta", mpath);
    m.solver.max_iter = get<int>(sc, "max_iter", mpath);
    m.solver.tol = get<double>(sc, "tol", mpath);
    m.solver.dense_limit = get<Index>(sc, "dense_limit", mpath);
    m.info.method = get<std::string>(s, "method", mpath);
    m.info.iterations = get<int>(s, "iterations", mpath);
    m.info.gradient_norm = get<double>(s, "gradient_norm", mpath);
    m.info.rank_deficient = get<bool>(s, "rank_deficient", mpath);
    const json& o = s.at("objective");
    m.terms = {get<double>(o, "data", mpath), get<double>(o, "laplacian", mpath), get<double>(o, "descriptor", mpath),
               get<double>(o, "total", mpath)};
    m.info.history = get<std::vector<double>>(meta, "objective_history", mpath);
    return m;
  }
  if (kind == "correspondence") {
    Correspondence c =
        load_correspondence_csv(need("correspondence.csv"), get<Index>(meta, "n_source", mpath),
                                get<Index>(meta, "n_target", mpath),
                                parse_correspondence_source(get<std::string>(meta, "source", mpath)));
    return c;
  }
  if (kind == "transform") {
    LinearTransform t;
    t.kind = parse_transform_kind(get<std::string>(meta, "transform_kind", mpath));
    t.matrix = read_lfme(need("matrix.lfme"));
    const Mat off = read_lfme(need("offset.lfme"));
    require(off.cols() == 1 && off.rows() == t.matrix.rows(), "offset.lfme has the wrong shape");
    t.offset = off.col(0);
    return t;
  }
  throw ValidationError(mpath.string() + ": unknown bundle kind '" + kind + "'");
}

}  // namespace lfm
