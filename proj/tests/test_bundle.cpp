#include "helpers.hpp"
#include "lfm/bundle.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace lfm;
using testing::TempDir;

namespace {

bool same_bits(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

SpectralBasis some_basis() {
  SpectralBasis b;
  b.eigenvectors = testing::gaussian(50, 50, 3);
  b.eigenvalues = Vec::LinSpaced(50, 0.0, 1.9);
  b.eigenvalues(7) = std::nextafter(b.eigenvalues(7), 1.0);  // odd bits survive
  b.residuals = Vec::Constant(50, 1e-12);
  return b;
}

}  // namespace

TEST_CASE("basis bundle round trip is bit exact") {
  TempDir dir("bbasis");
  const SpectralBasis b = some_basis();
  save_bundle(b, dir.path);
  CHECK(fs::exists(dir / "meta.json"));
  CHECK(fs::exists(dir / "eigenvalues.csv"));
  const auto back = load_bundle_as<SpectralBasis>(dir.path);
  CHECK(same_bits(back.eigenvectors, b.eigenvectors));
  CHECK(same_bits(back.eigenvalues, b.eigenvalues));
  CHECK(same_bits(back.residuals, b.residuals));
  CHECK(read_bundle_meta(dir.path).at("kind") == "basis");
}

TEST_CASE("map bundle round trip keeps matrix and solver metadata") {
  TempDir dir("bmap");
  FunctionalMap m;
  m.C = testing::gaussian(50, 50, 4);
  m.solver.alpha = 0.25;
  m.solver.dense_limit = 17;
  m.descriptor_kinds = {"anchor_geodesic"};
  m.terms = {1.0, 2.0, 3.0, 6.0};
  m.info.method = "cg";
  m.info.iterations = 12;
  m.info.history = {9.0, 7.0, 6.0};
  m.provenance = FunctionalMap::Provenance::refined;
  m.refine_steps = 4;
  save_bundle(m, dir.path, Provenance{{}, {{"note", "x"}}});
  const auto back = load_bundle_as<FunctionalMap>(dir.path);
  CHECK(same_bits(back.C, m.C));
  CHECK(back.solver.alpha == 0.25);
  CHECK(back.solver.dense_limit == 17);
  CHECK(back.info.method == "cg");
  CHECK(back.info.iterations == 12);
  CHECK(back.info.history == m.info.history);
  CHECK(back.terms.total == 6.0);
  CHECK(back.provenance == FunctionalMap::Provenance::refined);
  CHECK(back.refine_steps == 4);
  CHECK(back.descriptor_kinds == m.descriptor_kinds);
  CHECK(read_bundle_meta(dir.path).at("provenance").at("config").at("note") == "x");
}

TEST_CASE("graph, correspondence and transform bundles round trip") {
  TempDir dir("bother");
  GraphConfig gc;
  gc.k = 2;
  const LatentGraph g = LatentGraph::from_edges(4, {{0, 1, 0.5, 0.1}, {1, 2, 0.25, 0.2}, {0, 3, 1.0, 0.05}}, gc, 0.3);
  save_bundle(g, dir / "g");
  const auto gb = load_bundle_as<LatentGraph>(dir / "g");
  CHECK(Mat(gb.weights) == Mat(g.weights));
  CHECK(Mat(gb.lengths) == Mat(g.lengths));
  CHECK(gb.degrees == g.degrees);
  CHECK(gb.sigma == 0.3);
  CHECK(gb.config.k == 2);

  Correspondence c;
  c.assignment = {2, -1, 0, 2};
  c.n_target = 3;
  c.source = Correspondence::Source::extracted;
  save_bundle(c, dir / "c");
  const auto cb = load_bundle_as<Correspondence>(dir / "c");
  CHECK(cb.assignment == c.assignment);
  CHECK(cb.n_target == 3);
  CHECK(cb.source == c.source);

  LinearTransform t;
  t.kind = LinearTransform::Kind::affine;
  t.matrix = testing::gaussian(3, 4, 5);
  t.offset = testing::gaussian(3, 1, 6);
  save_bundle(t, dir / "t");
  const auto tb = load_bundle_as<LinearTransform>(dir / "t");
  CHECK(tb.kind == t.kind);
  CHECK(same_bits(tb.matrix, t.matrix));
  CHECK(same_bits(tb.offset, t.offset));

  CHECK_THROWS_AS(load_bundle_as<SpectralBasis>(dir / "t"), ValidationError);
}

TEST_CASE("tampering and version mismatch are detected") {
  TempDir dir("btamper");
  save_bundle(some_basis(), dir / "a");
  std::string bytes = testing::read_text(dir / "a" / "eigenvectors.lfme");
  bytes[bytes.size() - 3] ^= 0x1;
  testing::write_text(dir / "a" / "eigenvectors.lfme", bytes);
  CHECK_THROWS_WITH_AS(load_bundle(dir / "a"), doctest::Contains("checksum"), ValidationError);

  save_bundle(some_basis(), dir / "b");
  auto meta = read_bundle_meta(dir / "b");
  meta["version"] = kBundleVersion + 1;
  testing::write_text(dir / "b" / "meta.json", meta.dump());
  CHECK_THROWS_WITH_AS(load_bundle(dir / "b"), doctest::Contains("version"), ValidationError);

  CHECK_THROWS_AS(load_bundle(dir / "nowhere"), ValidationError);
}

TEST_CASE("sources are hashed into provenance") {
  TempDir dir("bprov");
  testing::write_text(dir / "in.txt", "abc");
  // Known SHA-256 of "abc".
  CHECK(sha256_file(dir / "in.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  save_bundle(some_basis(), dir / "b", Provenance{{dir / "in.txt"}, {}});
  const auto src = read_bundle_meta(dir / "b").at("provenance").at("sources");
  REQUIRE(src.size() == 1);
  CHECK(src[0].at("sha256") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("correspondence csv") {
  TempDir dir("ccsv");
  Correspondence c;
  c.assignment = {1, -1, 0};
  c.n_target = 2;
  save_correspondence_csv(c, dir / "c.csv");
  const auto back = load_correspondence_csv(dir / "c.csv", 3, 2, Correspondence::Source::ground_truth);
  CHECK(back.assignment == c.assignment);
  testing::write_text(dir / "bad.csv", "src_index,dst_index\n0,1\n1,5\n");
  CHECK_THROWS_WITH_AS(load_correspondence_csv(dir / "bad.csv", 3, 2, Correspondence::Source::ground_truth),
                       doctest::Contains(":3"), ValidationError);
}
