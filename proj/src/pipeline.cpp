#include "lfm/pipeline.hpp"

#include <algorithm>
#include <set>

namespace lfm {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  require(j.is_object(), where + ": expected a JSON object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    require(known.count(k) > 0, where + ": unknown key '" + k + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

json to_json(const GraphConfig& g) {
  json w = {{"kind", g.weight.kind == WeightFn::Kind::gaussian ? "gaussian" : "binary"}};
  w["sigma"] = g.weight.sigma ? json(*g.weight.sigma) : json("auto");
  return {{"k", g.k}, {"metric", to_string(g.metric)}, {"weight", w}};
}

json to_json(const SolverConfig& s) {
  return {{"alpha", s.alpha}, {"beta", s.beta}, {"max_iter", s.max_iter}, {"tol", s.tol}, {"dense_limit", s.dense_limit}};
}

void PipelineConfig::validate() const {
  require(auto_k || graph.k >= 1, "graph.k must be >= 1");
  if (graph.weight.sigma) require(*graph.weight.sigma > 0.0, "graph sigma must be > 0");
  require(k_e >= 1, "k_e must be >= 1");
  require(eig_tol > 0.0, "eig_tol must be > 0");
  solver.validate();
  require(zoomout.step >= 1, "zoomout.step must be >= 1");
  require(zoomout.target >= 1, "zoomout.target must be >= 1");
  require(threads >= 0, "threads must be >= 0");
}

int PipelineConfig::neighbors(Index n) const { return auto_k ? default_k(n) : graph.k; }

int PipelineConfig::zoom_steps(Index n) const {
  if (!zoomout.enabled) return 0;
  return zoomout_steps(k_e, std::min<Index>(zoomout.target, n), zoomout.step);
}

Index PipelineConfig::basis_size(Index n) const {
  return static_cast<Index>(k_e) + static_cast<Index>(zoom_steps(n)) * zoomout.step;
}

json PipelineConfig::to_json() const {
  json g = lfm::to_json(graph);
  g["k"] = auto_k ? json("auto") : json(graph.k);
  return {{"graph", g},
          {"k_e", k_e},
          {"eig_tol", eig_tol},
          {"solver", lfm::to_json(solver)},
          {"zoomout", {{"enabled", zoomout.enabled}, {"step", zoomout.step}, {"target", zoomout.target}}},
          {"descriptor", lfm::to_string(descriptor)},
          {"fit", lfm::to_string(fit)},
          {"seed", seed},
          {"threads", threads}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  reject_unknown(j, {"graph", "k_e", "eig_tol", "solver", "zoomout", "descriptor", "fit", "seed", "threads"}, "config");
  if (j.contains("graph")) {
    const json& g = j.at("graph");
    reject_unknown(g, {"k", "metric", "weight"}, "config.graph");
    if (g.contains("k")) {
      if (g.at("k").is_string()) {
        require(g.at("k") == "auto", "config.graph.k: expected an integer or \"auto\"");
        c.auto_k = true;
      } else {
        read(g, "k", c.graph.k, "config.graph");
        c.auto_k = false;
      }
    }
    std::string metric = to_string(c.graph.metric);
    read(g, "metric", metric, "config.graph");
    c.graph.metric = parse_metric(metric);
    if (g.contains("weight")) {
      const json& w = g.at("weight");
      reject_unknown(w, {"kind", "sigma"}, "config.graph.weight");
      std::string kind = "gaussian";
      read(w, "kind", kind, "config.graph.weight");
      require(kind == "gaussian" || kind == "binary", "config.graph.weight.kind must be gaussian or binary");
      c.graph.weight.kind = kind == "gaussian" ? WeightFn::Kind::gaussian : WeightFn::Kind::binary;
      if (w.contains("sigma") && !w.at("sigma").is_string()) {
        double s = 0.0;
        read(w, "sigma", s, "config.graph.weight");
        c.graph.weight.sigma = s;
      } else if (w.contains("sigma")) {
        require(w.at("sigma") == "auto", "config.graph.weight.sigma: expected a number or \"auto\"");
      }
    }
  }
  read(j, "k_e", c.k_e, "config");
  read(j, "eig_tol", c.eig_tol, "config");
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    reject_unknown(s, {"alpha", "beta", "max_iter", "tol", "dense_limit"}, "config.solver");
    read(s, "alpha", c.solver.alpha, "config.solver");
    read(s, "beta", c.solver.beta, "config.solver");
    read(s, "max_iter", c.solver.max_iter, "config.solver");
    read(s, "tol", c.solver.tol, "config.solver");
    read(s, "dense_limit", c.solver.dense_limit, "config.solver");
  }
  if (j.contains("zoomout")) {
    const json& z = j.at("zoomout");
    reject_unknown(z, {"enabled", "step", "target"}, "config.zoomout");
    read(z, "enabled", c.zoomout.enabled, "config.zoomout");
    read(z, "step", c.zoomout.step, "config.zoomout");
    read(z, "target", c.zoomout.target, "config.zoomout");
  }
  std::string desc = to_string(c.descriptor), fit = to_string(c.fit);
  read(j, "descriptor", desc, "config");
  read(j, "fit", fit, "config");
  c.descriptor = parse_descriptor_kind(desc);
  c.fit = parse_transform_kind(fit);
  read(j, "seed", c.seed, "config");
  read(j, "threads", c.threads, "config");
  c.validate();
  return c;
}

SpaceModel build_space(const EmbeddingSet& x, const PipelineConfig& cfg) {
  cfg.validate();
  x.validate();
  SpaceModel s;
  s.points = x;
  GraphConfig g = cfg.graph;
  g.k = cfg.neighbors(x.n());
  s.graph = build_knn_graph(x, g);
  const Index size = cfg.basis_size(x.n());
  require(size <= x.n(), "requested " + std::to_string(size) + " eigenvectors on a space of " +
                             std::to_string(x.n()) + " points");
  EigenOptions eo;
  eo.tol = cfg.eig_tol;
  s.basis = eigenbasis(normalized_laplacian(s.graph), size, eo);
  return s;
}

std::pair<DescriptorSet, DescriptorSet> make_descriptors(const SpaceModel& sx, const SpaceModel& sy,
                                                         const PipelineConfig& cfg, const AnchorSet* anchors,
                                                         const LabelAssignment* labels_x,
                                                         const LabelAssignment* labels_y) {
  switch (cfg.descriptor) {
    case DescriptorKind::anchor_geodesic:
    case DescriptorKind::anchor_metric: {
      require(anchors && anchors->size() >= 1, "anchor descriptors need a non-empty anchor set");
      anchors->validate(sx.points.n(), sy.points.n());
      const AnchorMode mode =
          cfg.descriptor == DescriptorKind::anchor_geodesic ? AnchorMode::geodesic : AnchorMode::metric;
      const auto src = anchors->src(), dst = anchors->dst();
      return {anchor_distance_descriptors(sx.points, sx.graph, src, mode),
              anchor_distance_descriptors(sy.points, sy.graph, dst, mode)};
    }
    case DescriptorKind::label_indicator: {
      require(labels_x && labels_y, "label descriptors need labels for both spaces");
      labels_x->validate(sx.points.n());
      labels_y->validate(sy.points.n());
      const auto order = shared_class_order(*labels_x, *labels_y);
      return {label_indicator_descriptors(*labels_x, order), label_indicator_descriptors(*labels_y, order)};
    }
    case DescriptorKind::hks: {
      const SpectralBasis bx = sx.basis.truncated(cfg.k_e), by = sy.basis.truncated(cfg.k_e);
      const auto times = default_hks_times(bx);
      return {heat_kernel_signature(bx, times), heat_kernel_signature(by, times)};
    }
    case DescriptorKind::wks: {
      const SpectralBasis bx = sx.basis.truncated(cfg.k_e), by = sy.basis.truncated(cfg.k_e);
      const auto w = default_wks_samples(bx);
      return {wave_kernel_signature(bx, w.energies, w.variance), wave_kernel_signature(by, w.energies, w.variance)};
    }
  }
  throw ValidationError("unsupported descriptor kind");
}

PairAlignment align_spaces(const SpaceModel& sx, const SpaceModel& sy, const DescriptorSet& fx,
                           const DescriptorSet& fy, const PipelineConfig& cfg) {
  cfg.validate();
  require(cfg.k_e <= sx.basis.size() && cfg.k_e <= sy.basis.size(), "bases are smaller than k_e");
  PairAlignment out;
  out.seed = solve_lfm(sx.basis.truncated(cfg.k_e), sy.basis.truncated(cfg.k_e), fx, fy, cfg.solver);
  const int steps = std::min(cfg.zoom_steps(sx.points.n()), cfg.zoom_steps(sy.points.n()));
  if (steps > 0) {
    out.refined = zoomout_refine(out.seed, sx.basis, sy.basis, steps, cfg.zoomout.step, &out.trace);
    out.correspondence = out.trace.maps.back();
  } else {
    out.refined = out.seed;
    out.correspondence = extract_pointwise(out.seed.C, sx.basis.truncated(cfg.k_e), sy.basis.truncated(cfg.k_e));
    out.trace.sizes = {cfg.k_e};
    out.trace.maps = {out.correspondence};
  }
  return out;
}

}  // namespace lfm
