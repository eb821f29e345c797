#include "lfm/cli.hpp"

#include "lfm/analysis.hpp"
#include "lfm/bundle.hpp"
#include "lfm/evalbench.hpp"
#include "lfm/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace lfm {

using nlohmann::json;

namespace {

// Flags shared by every subcommand.
struct Common {
  std::string out;
  std::string config;
  int threads = 0;
};

struct Inputs {
  std::string x_emb, y_emb, format;
  std::string x_graph, y_graph, x_basis, y_basis;
  std::string x_labels, y_labels, anchors, gt, map, transform;
};

// Config overrides; each applies only when its flag was given.
struct Overrides {
  std::string k, metric, weight, desc, fit;
  double sigma = 0.0, alpha = 0.0, beta = 0.0, eig_tol = 0.0, solver_tol = 0.0;
  int k_e = 0, max_iter = 0, zoom_step = 0, zoom_target = 0;
  unsigned long long seed = 0;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError(path.string() + ": cannot open file for writing");
  out << j.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open config file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

EmbeddingSet load_emb(const std::string& path, const std::string& format) {
  require(!path.empty(), "missing embedding file");
  return load_embeddings(path, format.empty() ? guess_embedding_format(path) : parse_embedding_format(format));
}

class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& help) : sub_(app.add_subcommand(name, help)) {
    sub_->add_option("--out", common_.out, "Run directory for artifacts")->required();
    sub_->add_option("--config", common_.config, "Pipeline config JSON; explicit flags override it");
    sub_->add_option("--threads", common_.threads, "Worker cap (results do not depend on it)")
        ->check(CLI::NonNegativeNumber);
  }
  virtual ~Command() = default;

  CLI::App* app() { return sub_; }
  bool chosen() const { return sub_->parsed(); }

  int execute() {
    cfg_ = common_.config.empty() ? PipelineConfig{} : PipelineConfig::from_json(read_json_file(common_.config));
    apply_overrides();
    if (flag("--threads")) cfg_.threads = common_.threads;
    cfg_.validate();
    set_num_threads(cfg_.threads);
    out_ = common_.out;
    fs::create_directories(out_);
    json report = {{"command", sub_->get_name()}};
    run(report);
    json args = json::object();
    for (const CLI::Option* o : sub_->get_options()) {
      if (o->count() == 0 || o->get_name() == "--help") continue;
      const auto r = o->results();
      args[o->get_name()] = r.size() == 1 ? json(r[0]) : json(r);
    }
    write_json(out_ / "config.json", {{"command", sub_->get_name()}, {"args", args}, {"pipeline", cfg_.to_json()}});
    write_json(out_ / "report.json", report);
    return 0;
  }

 protected:
  virtual void run(json& report) = 0;

  bool flag(const std::string& name) const {
    try {
      return sub_->get_option(name)->count() > 0;
    } catch (const CLI::OptionNotFound&) {
      return false;
    }
  }

  void add_inputs(std::initializer_list<const char*> which) {
    for (std::string w : which) {
      std::string* target = nullptr;
      std::string help;
      if (w == "x-emb") target = &in_.x_emb, help = "Embeddings of space X (csv or lfme)";
      else if (w == "y-emb") target = &in_.y_emb, help = "Embeddings of space Y (csv or lfme)";
      else if (w == "format") target = &in_.format, help = "Embedding format: csv or lfme (default: by extension)";
      else if (w == "x-graph") target = &in_.x_graph, help = "Graph bundle of X";
      else if (w == "y-graph") target = &in_.y_graph, help = "Graph bundle of Y";
      else if (w == "x-basis") target = &in_.x_basis, help = "Basis bundle of X";
      else if (w == "y-basis") target = &in_.y_basis, help = "Basis bundle of Y";
      else if (w == "x-labels") target = &in_.x_labels, help = "id,label CSV for X";
      else if (w == "y-labels") target = &in_.y_labels, help = "id,label CSV for Y";
      else if (w == "anchors") target = &in_.anchors, help = "src_index,dst_index anchor CSV";
      else if (w == "gt") target = &in_.gt, help = "Ground-truth src_index,dst_index CSV";
      else if (w == "map") target = &in_.map, help = "Map bundle";
      else if (w == "transform") target = &in_.transform, help = "Transform bundle";
      sub_->add_option("--" + w, *target, help);
    }
  }

  void add_graph_flags() {
    sub_->add_option("--k", ov_.k, "Neighbors per node, or 'auto'");
    sub_->add_option("--metric", ov_.metric, "angular or euclidean");
    sub_->add_option("--weight", ov_.weight, "gaussian or binary");
    sub_->add_option("--sigma", ov_.sigma, "Fixed gaussian bandwidth (default: mean k-th neighbor distance)")
        ->check(CLI::PositiveNumber);
  }
  void add_eigen_flags() {
    sub_->add_option("--ke", ov_.k_e, "Eigenvectors in the solved map")->check(CLI::PositiveNumber);
    sub_->add_option("--eig-tol", ov_.eig_tol, "Eigen residual tolerance")->check(CLI::PositiveNumber);
  }
  void add_solver_flags() {
    sub_->add_option("--desc", ov_.desc, "Descriptors: geodesic, metric, labels, hks or wks");
    sub_->add_option("--alpha", ov_.alpha, "Laplacian commutativity weight")->check(CLI::NonNegativeNumber);
    sub_->add_option("--beta", ov_.beta, "Descriptor commutativity weight")->check(CLI::NonNegativeNumber);
    sub_->add_option("--max-iter", ov_.max_iter, "CG iteration cap")->check(CLI::PositiveNumber);
    sub_->add_option("--solver-tol", ov_.solver_tol, "CG relative residual tolerance")->check(CLI::PositiveNumber);
    sub_->add_option("--zoom-step", ov_.zoom_step, "ZoomOut growth per step")->check(CLI::PositiveNumber);
    sub_->add_option("--zoom-target", ov_.zoom_target, "ZoomOut final size")->check(CLI::PositiveNumber);
  }
  void add_fit_flag() { sub_->add_option("--fit", ov_.fit, "Transform: ortho, linear or affine"); }
  void add_seed_flag() { sub_->add_option("--seed", ov_.seed, "Random seed"); }

  void apply_overrides() {
    if (flag("--k")) {
      if (ov_.k == "auto") {
        cfg_.auto_k = true;
      } else {
        try {
          cfg_.graph.k = std::stoi(ov_.k);
        } catch (const std::exception&) {
          throw ValidationError("--k: expected an integer or 'auto', got '" + ov_.k + "'");
        }
        cfg_.auto_k = false;
      }
    }
    if (flag("--metric")) cfg_.graph.metric = parse_metric(ov_.metric);
    if (flag("--weight")) {
      require(ov_.weight == "gaussian" || ov_.weight == "binary", "--weight must be gaussian or binary");
      cfg_.graph.weight.kind = ov_.weight == "gaussian" ? WeightFn::Kind::gaussian : WeightFn::Kind::binary;
    }
    if (flag("--sigma")) cfg_.graph.weight.sigma = ov_.sigma;
    if (flag("--ke")) cfg_.k_e = ov_.k_e;
    if (flag("--eig-tol")) cfg_.eig_tol = ov_.eig_tol;
    if (flag("--desc")) cfg_.descriptor = parse_descriptor_kind(ov_.desc);
    if (flag("--alpha")) cfg_.solver.alpha = ov_.alpha;
    if (flag("--beta")) cfg_.solver.beta = ov_.beta;
    if (flag("--max-iter")) cfg_.solver.max_iter = ov_.max_iter;
    if (flag("--solver-tol")) cfg_.solver.tol = ov_.solver_tol;
    if (flag("--zoom-step")) cfg_.zoomout.step = ov_.zoom_step;
    if (flag("--zoom-target")) cfg_.zoomout.target = ov_.zoom_target;
    if (flag("--fit")) cfg_.fit = parse_transform_kind(ov_.fit);
    if (flag("--seed")) cfg_.seed = ov_.seed;
  }

  Provenance provenance(std::initializer_list<std::string> sources) const {
    Provenance p;
    for (const auto& s : sources)
      if (!s.empty()) p.sources.push_back(fs::is_directory(s) ? fs::path(s) / "meta.json" : fs::path(s));
    p.config = cfg_.to_json();
    return p;
  }

  LabelAssignment labels_for(const std::string& path, const EmbeddingSet& set, const char* what) const {
    require(!path.empty(), std::string("missing ") + what);
    return load_labels(path, set);
  }

  CLI::App* sub_;
  Common common_;
  Inputs in_;
  Overrides ov_;
  PipelineConfig cfg_;
  fs::path out_;
};

class GraphCmd : public Command {
 public:
  explicit GraphCmd(CLI::App& app) : Command(app, "graph", "Embeddings -> k-NN graph bundle") {
    add_inputs({"x-emb", "format"});
    add_graph_flags();
    sub_->get_option("--x-emb")->required();
  }
  void run(json& report) override {
    const EmbeddingSet x = load_emb(in_.x_emb, in_.format);
    GraphConfig g = cfg_.graph;
    g.k = cfg_.neighbors(x.n());
    const LatentGraph graph = build_knn_graph(x, g);
    save_bundle(graph, out_, provenance({in_.x_emb}));
    report.update({{"n", graph.n()},
                   {"k", g.k},
                   {"metric", to_string(g.metric)},
                   {"edges", graph.edge_count()},
                   {"sigma", graph.sigma},
                   {"repair_edges", graph.repair_edges}});
  }
};

class BasisCmd : public Command {
 public:
  explicit BasisCmd(CLI::App& app) : Command(app, "basis", "Graph bundle -> eigenbasis bundle") {
    add_inputs({"x-graph"});
    add_eigen_flags();
    sub_->add_option("--size", size_, "Eigenpairs to compute (default: k_e plus ZoomOut growth)")
        ->check(CLI::PositiveNumber);
    sub_->get_option("--x-graph")->required();
  }
  void run(json& report) override {
    const LatentGraph g = load_bundle_as<LatentGraph>(in_.x_graph);
    const Index size = size_ > 0 ? size_ : std::min<Index>(cfg_.basis_size(g.n()), g.n());
    EigenOptions eo;
    eo.tol = cfg_.eig_tol;
    const SpectralBasis b = eigenbasis(normalized_laplacian(g), size, eo);
    save_bundle(b, out_, provenance({in_.x_graph}));
    report.update({{"n", b.n()},
                   {"size", b.size()},
                   {"max_residual", b.residuals.maxCoeff()},
                   {"lambda_min", b.eigenvalues(0)},
                   {"lambda_max", b.eigenvalues(b.size() - 1)}});
  }

 private:
  Index size_ = 0;
};

SpaceModel space_from(const std::string& emb, const std::string& format, const std::string& graph,
                      const std::string& basis) {
  SpaceModel s;
  if (!emb.empty()) s.points = load_emb(emb, format);
  if (!graph.empty()) s.graph = load_bundle_as<LatentGraph>(graph);
  s.basis = load_bundle_as<SpectralBasis>(basis);
  if (!emb.empty()) require(s.points.n() == s.basis.n(), emb + ": point count differs from the basis");
  if (!graph.empty()) require(s.graph.n() == s.basis.n(), graph + ": node count differs from the basis");
  return s;
}

class MapCmd : public Command {
 public:
  explicit MapCmd(CLI::App& app) : Command(app, "map", "Two bases + descriptors -> functional map bundle") {
    add_inputs({"x-basis", "y-basis", "x-graph", "y-graph", "x-emb", "y-emb", "format", "anchors", "x-labels",
                "y-labels"});
    add_eigen_flags();
    add_solver_flags();
    sub_->add_flag("--zoomout", zoomout_, "Refine the solved map with ZoomOut");
    sub_->get_option("--x-basis")->required();
    sub_->get_option("--y-basis")->required();
  }
  void run(json& report) override {
    const bool anchored =
        cfg_.descriptor == DescriptorKind::anchor_geodesic || cfg_.descriptor == DescriptorKind::anchor_metric;
    const bool labels = cfg_.descriptor == DescriptorKind::label_indicator;
    if (anchored || labels) {
      require(!in_.x_emb.empty() && !in_.y_emb.empty(), "--desc " + to_string(cfg_.descriptor) +
                                                            " needs --x-emb and --y-emb");
    }
    if (anchored) {
      require(!in_.x_graph.empty() && !in_.y_graph.empty(), "anchor descriptors need --x-graph and --y-graph");
      require(!in_.anchors.empty(), "anchor descriptors need --anchors");
    }
    const SpaceModel sx = space_from(in_.x_emb, in_.format, in_.x_graph, in_.x_basis);
    const SpaceModel sy = space_from(in_.y_emb, in_.format, in_.y_graph, in_.y_basis);
    require(cfg_.k_e <= sx.basis.size() && cfg_.k_e <= sy.basis.size(),
            "k_e = " + std::to_string(cfg_.k_e) + " exceeds the basis sizes");

    AnchorSet anchors;
    LabelAssignment lx, ly;
    if (anchored) anchors = load_anchors(in_.anchors, sx.points.n(), sy.points.n());
    if (labels) {
      lx = labels_for(in_.x_labels, sx.points, "--x-labels");
      ly = labels_for(in_.y_labels, sy.points, "--y-labels");
    }
    const auto [fx, fy] = make_descriptors(sx, sy, cfg_, &anchors, &lx, &ly);
    PipelineConfig run_cfg = cfg_;
    run_cfg.zoomout.enabled = zoomout_;
    run_cfg.zoomout.target =
        static_cast<int>(std::min<Index>({run_cfg.zoomout.target, sx.basis.size(), sy.basis.size()}));
    const PairAlignment a = align_spaces(sx, sy, fx, fy, run_cfg);
    save_bundle(a.refined, out_, provenance({in_.x_basis, in_.y_basis, in_.anchors, in_.x_labels, in_.y_labels}));
    save_bundle(a.correspondence, out_ / "correspondence", provenance({in_.x_basis, in_.y_basis}));
    const SimilarityReport s = lfm_similarity(a.refined.C);
    report.update({{"k_x", a.refined.k_x()},
                   {"k_y", a.refined.k_y()},
                   {"descriptor", to_string(cfg_.descriptor)},
                   {"descriptor_count", fx.count()},
                   {"solver_method", a.seed.info.method},
                   {"rank_deficient", a.seed.info.rank_deficient},
                   {"objective",
                    {{"data", a.seed.terms.data},
                     {"laplacian", a.seed.terms.laplacian},
                     {"descriptor", a.seed.terms.descriptor},
                     {"total", a.seed.terms.total}}},
                   {"zoomout_steps", a.refined.refine_steps},
                   {"similarity", s.score}});
  }

 private:
  bool zoomout_ = false;
};

class SimilarityCmd : public Command {
 public:
  explicit SimilarityCmd(CLI::App& app) : Command(app, "similarity", "Map bundle -> similarity score") {
    add_inputs({"map", "y-basis", "y-emb", "format"});
    sub_->get_option("--map")->required();
  }
  void run(json& report) override {
    const FunctionalMap m = load_bundle_as<FunctionalMap>(in_.map);
    const SimilarityReport s = lfm_similarity(m.C);
    report.update({{"score", s.score}, {"offdiag_energy", s.offdiag_energy}, {"total_energy", s.total_energy}});
    if (in_.y_basis.empty()) return;
    const SpectralBasis by = load_bundle_as<SpectralBasis>(in_.y_basis);
    require(by.size() >= m.k_x(), "Y basis is smaller than the map");
    const Vec f = distortion_function(m.C, by.truncated(m.k_x()));
    std::vector<std::string> ids;
    if (!in_.y_emb.empty()) {
      const EmbeddingSet y = load_emb(in_.y_emb, in_.format);
      require(y.n() == f.size(), "Y embeddings do not match the basis");
      ids = y.ids;
    } else {
      for (Index i = 0; i < f.size(); ++i) ids.push_back(std::to_string(i));
    }
    std::ofstream out(out_ / "distortion.csv");
    out << "id,value\n";
    for (Index i = 0; i < f.size(); ++i) out << ids[i] << ',' << format_double(f(i)) << '\n';
    report["distortion_file"] = "distortion.csv";
  }
};

class AlignCmd : public Command {
 public:
  explicit AlignCmd(CLI::App& app) : Command(app, "align", "Map or anchors + embeddings -> correspondence and transform") {
    add_inputs({"x-emb", "y-emb", "format", "map", "x-basis", "y-basis", "anchors", "x-labels", "y-labels", "gt"});
    add_graph_flags();
    add_eigen_flags();
    add_solver_flags();
    add_fit_flag();
    sub_->add_flag("--direct", direct_, "Fit on the anchors alone, skipping the functional map");
    sub_->get_option("--x-emb")->required();
    sub_->get_option("--y-emb")->required();
  }
  void run(json& report) override {
    const EmbeddingSet x = load_emb(in_.x_emb, in_.format);
    const EmbeddingSet y = load_emb(in_.y_emb, in_.format);
    Correspondence corr;
    std::string mode;
    if (!in_.map.empty()) {
      require(!in_.x_basis.empty() && !in_.y_basis.empty(), "--map needs --x-basis and --y-basis");
      const FunctionalMap m = load_bundle_as<FunctionalMap>(in_.map);
      const SpectralBasis bx = load_bundle_as<SpectralBasis>(in_.x_basis);
      const SpectralBasis by = load_bundle_as<SpectralBasis>(in_.y_basis);
      require(bx.n() == x.n() && by.n() == y.n(), "bases do not match the embeddings");
      require(bx.size() >= m.k_x() && by.size() >= m.k_y(), "bases are smaller than the map");
      corr = extract_pointwise(m.C, bx.truncated(m.k_x()), by.truncated(m.k_y()));
      mode = "map";
    } else if (direct_) {
      require(!in_.anchors.empty(), "--direct needs --anchors");
      corr = Correspondence::from_anchors(load_anchors(in_.anchors, x.n(), y.n()), x.n(), y.n());
      mode = "anchors";
    } else {
      const bool labels = cfg_.descriptor == DescriptorKind::label_indicator;
      AnchorSet anchors;
      LabelAssignment lx, ly;
      if (labels) {
        lx = labels_for(in_.x_labels, x, "--x-labels");
        ly = labels_for(in_.y_labels, y, "--y-labels");
      } else if (cfg_.descriptor != DescriptorKind::hks && cfg_.descriptor != DescriptorKind::wks) {
        require(!in_.anchors.empty(), "align needs --map, --anchors or label descriptors");
        anchors = load_anchors(in_.anchors, x.n(), y.n());
      }
      const SpaceModel sx = build_space(x, cfg_);
      const SpaceModel sy = build_space(y, cfg_);
      const auto [fx, fy] = make_descriptors(sx, sy, cfg_, &anchors, &lx, &ly);
      const PairAlignment a = align_spaces(sx, sy, fx, fy, cfg_);
      corr = a.correspondence;
      save_bundle(a.refined, out_ / "map", provenance({in_.x_emb, in_.y_emb, in_.anchors}));
      report["similarity"] = lfm_similarity(a.refined.C).score;
      mode = "pipeline";
    }
    const LinearTransform t = fit_transform(x, y, corr, cfg_.fit);
    save_bundle(corr, out_ / "correspondence", provenance({in_.x_emb, in_.y_emb, in_.map, in_.anchors}));
    save_bundle(t, out_ / "transform", provenance({in_.x_emb, in_.y_emb, in_.map, in_.anchors}));
    report.update({{"mode", mode}, {"fit", to_string(t.kind)}, {"pairs", corr.assigned()}});
    if (!in_.gt.empty()) {
      const Correspondence gt =
          load_correspondence_csv(in_.gt, x.n(), y.n(), Correspondence::Source::ground_truth);
      const RetrievalResult r = mrr(t.apply(x.data), y.data, gt.assignment);
      report.update({{"mrr", r.mrr}, {"hits_at_1", r.hits_at_1}, {"queries", r.queries}});
    }
  }

 private:
  bool direct_ = false;
};

class RetrieveCmd : public Command {
 public:
  explicit RetrieveCmd(CLI::App& app)
      : Command(app, "retrieve", "Transform or map coefficients + ground truth -> MRR") {
    add_inputs({"x-emb", "y-emb", "format", "gt", "transform", "map", "x-graph", "y-graph", "x-basis", "y-basis"});
    sub_->get_option("--x-emb")->required();
    sub_->get_option("--y-emb")->required();
    sub_->get_option("--gt")->required();
  }
  void run(json& report) override {
    const EmbeddingSet x = load_emb(in_.x_emb, in_.format);
    const EmbeddingSet y = load_emb(in_.y_emb, in_.format);
    const Correspondence gt = load_correspondence_csv(in_.gt, x.n(), y.n(), Correspondence::Source::ground_truth);
    RetrievalResult r;
    if (!in_.transform.empty()) {
      const LinearTransform t = load_bundle_as<LinearTransform>(in_.transform);
      r = mrr(t.apply(x.data), y.data, gt.assignment);
      report["mode"] = "transform";
    } else {
      require(!in_.map.empty(), "retrieve needs --transform or --map");
      require(!in_.x_graph.empty() && !in_.y_graph.empty() && !in_.x_basis.empty() && !in_.y_basis.empty(),
              "coefficient retrieval needs --x-graph, --y-graph, --x-basis and --y-basis");
      const FunctionalMap m = load_bundle_as<FunctionalMap>(in_.map);
      SpaceModel sx = space_from("", "", in_.x_graph, in_.x_basis);
      SpaceModel sy = space_from("", "", in_.y_graph, in_.y_basis);
      sx.points = x;
      sy.points = y;
      require(x.n() == sx.basis.n() && y.n() == sy.basis.n(), "embeddings do not match the bases");
      r = functional_space_retrieval(m.C, sx, sy, gt);
      report["mode"] = "coefficients";
    }
    report.update({{"mrr", r.mrr}, {"hits_at_1", r.hits_at_1}, {"queries", r.queries}});
  }
};

class StitchCmd : public Command {
 public:
  explicit StitchCmd(CLI::App& app) : Command(app, "stitch", "Transform + labels -> nearest-centroid accuracy") {
    add_inputs({"transform", "x-emb", "y-emb", "format", "x-labels", "y-labels"});
    for (const char* o : {"--transform", "--x-emb", "--y-emb", "--x-labels", "--y-labels"})
      sub_->get_option(o)->required();
  }
  void run(json& report) override {
    const EmbeddingSet x = load_emb(in_.x_emb, in_.format);
    const EmbeddingSet y = load_emb(in_.y_emb, in_.format);
    const LabelAssignment lx = load_labels(in_.x_labels, x);
    const LabelAssignment ly = load_labels(in_.y_labels, y);
    const LinearTransform t = load_bundle_as<LinearTransform>(in_.transform);
    LinearTransform self;
    self.matrix = Mat::Identity(y.d(), y.d());
    self.offset = Vec::Zero(y.d());
    report.update({{"accuracy", stitching_accuracy(x, t, y, ly, lx)},
                   {"self_accuracy", stitching_accuracy(y, self, y, ly, ly)}});
  }
};

class BenchCmd : public Command {
 public:
  explicit BenchCmd(CLI::App& app) : Command(app, "bench", "Noise/metric benchmark grid -> CSV") {
    sub_->add_option("--grid", grid_, "default, ablation or quick");
    add_seed_flag();
    sub_->add_flag("--timing", timing_, "Record wall-clock time per cell (output is then not reproducible)");
  }
  void run(json& report) override {
    BenchGrid grid = bench_grid(grid_);
    if (!common_.config.empty()) {
      // A config file replaces the grid's pipeline settings; metric and descriptor stay per cell.
      grid.pipeline = cfg_;
    }
    const auto rows = noise_benchmark(grid, cfg_.seed);
    std::ofstream csv(out_ / "bench.csv");
    write_bench_csv(rows, csv, timing_);
    std::vector<double> m, s;
    for (const auto& r : rows) {
      m.push_back(r.mrr);
      s.push_back(r.similarity);
    }
    report.update({{"grid", grid.name}, {"seed", cfg_.seed}, {"cells", rows.size()}, {"file", "bench.csv"}});
    if (rows.size() >= 2) report["spearman_mrr_similarity"] = spearman(m, s);
  }

 private:
  std::string grid_ = "default";
  bool timing_ = false;
};

class SynthCmd : public Command {
 public:
  explicit SynthCmd(CLI::App& app) : Command(app, "synth", "Write a synthetic rotated + noisy pair") {
    sub_->add_option("--n", n_, "Points")->check(CLI::PositiveNumber);
    sub_->add_option("--d", d_, "Dimension")->check(CLI::PositiveNumber);
    sub_->add_option("--noise", noise_, "Noise level as a fraction of the per-coordinate std")
        ->check(CLI::NonNegativeNumber);
    sub_->add_option("--anchors", anchors_, "Also write this many random anchor pairs")->check(CLI::NonNegativeNumber);
    add_seed_flag();
  }
  void run(json& report) override {
    const SyntheticPair p = synthetic_pair(n_, d_, noise_, cfg_.seed);
    save_embeddings(p.x, out_ / "x.csv", EmbeddingFormat::csv);
    save_embeddings(p.y, out_ / "y.csv", EmbeddingFormat::csv);
    save_correspondence_csv(p.ground_truth, out_ / "gt.csv");
    save_labels(p.labels_x, p.x, out_ / "x_labels.csv");
    save_labels(p.labels_y, p.y, out_ / "y_labels.csv");
    if (anchors_ > 0) save_anchors(sample_anchors(p.ground_truth, anchors_, cfg_.seed + 1), out_ / "anchors.csv");
    report.update({{"n", n_}, {"d", d_}, {"noise", noise_}, {"seed", cfg_.seed}, {"sigma_x", p.sigma_x}});
  }

 private:
  Index n_ = 1000, d_ = 64, anchors_ = 0;
  double noise_ = 0.0;
};

}  // namespace

int run_subcommand(const std::vector<std::string>& args) {
  CLI::App app{"Latent functional maps between embedding spaces", "lfm"};
  app.require_subcommand(1, 1);
  std::vector<std::unique_ptr<Command>> cmds;
  cmds.push_back(std::make_unique<GraphCmd>(app));
  cmds.push_back(std::make_unique<BasisCmd>(app));
  cmds.push_back(std::make_unique<MapCmd>(app));
  cmds.push_back(std::make_unique<SimilarityCmd>(app));
  cmds.push_back(std::make_unique<AlignCmd>(app));
  cmds.push_back(std::make_unique<RetrieveCmd>(app));
  cmds.push_back(std::make_unique<StitchCmd>(app));
  cmds.push_back(std::make_unique<BenchCmd>(app));
  cmds.push_back(std::make_unique<SynthCmd>(app));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    for (auto& c : cmds)
      if (c->chosen()) return c->execute();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_subcommand(args);
}

}  // namespace lfm
