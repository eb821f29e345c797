#include "helpers.hpp"
#include "lfm/analysis.hpp"
#include "lfm/evalbench.hpp"
#include "lfm/fmap.hpp"

#include <doctest.h>

#include <Eigen/QR>

using namespace lfm;

namespace {

Mat orthogonal(Index d, std::uint64_t seed) {
  Eigen::HouseholderQR<Mat> qr(testing::gaussian(d, d, seed));
  return qr.householderQ() * Mat::Identity(d, d);
}

}  // namespace

TEST_CASE("similarity of simple maps") {
  CHECK(lfm_similarity(orthogonal(9, 130)).score == doctest::Approx(1.0).epsilon(1e-12));
  Mat c(2, 2);
  c << 1, 1, 0, 1;
  // C^T C = [[1,1],[1,2]]: off-diagonal energy 2 of total 7.
  const SimilarityReport r = lfm_similarity(c);
  CHECK(r.score == doctest::Approx(5.0 / 7.0).epsilon(1e-14));
  CHECK(r.offdiag_energy == doctest::Approx(2.0));
  CHECK(r.total_energy == doctest::Approx(7.0));
  CHECK(lfm_similarity(Mat(Vec::LinSpaced(4, 1, 4).asDiagonal())).score == 1.0);
  CHECK_THROWS_AS(lfm_similarity(Mat::Zero(3, 3)), ValidationError);
  CHECK_THROWS_AS(lfm_similarity(Mat()), ValidationError);
}

TEST_CASE("similarity stays in [0, 1] and is scale invariant") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Mat c = testing::gaussian(6, 5, 131 + s);
    const double v = lfm_similarity(c).score;
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(lfm_similarity(3.5 * c).score == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("full-rank maps between orthonormal bases: symmetry and triangle inequality") {
  std::mt19937_64 rng(132);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 5 + 3 * trial;
    const Mat p[3] = {orthogonal(n, 200 + trial), orthogonal(n, 300 + trial), orthogonal(n, 400 + trial)};
    auto dist = [&](int i, int j) { return 1.0 - lfm_similarity(p[j].transpose() * p[i]).score; };
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(dist(i, j) - dist(j, i)) < 1e-6);
        for (int k = 0; k < 3; ++k) CHECK(dist(i, k) <= dist(i, j) + dist(j, k) + 1e-8);
      }
  }
}

TEST_CASE("distortion function") {
  SpectralBasis by;
  Eigen::HouseholderQR<Mat> qr(testing::gaussian(40, 6, 133));
  by.eigenvectors = qr.householderQ() * Mat::Identity(40, 6);
  by.eigenvalues = Vec::LinSpaced(6, 0.0, 1.0);
  by.residuals = Vec::Zero(6);
  // C^T C = diag(1, 9, 1, ...) puts all weight on the second basis function.
  Mat c = Mat::Identity(6, 6);
  c(1, 1) = 3.0;
  const Vec f = distortion_function(c, by);
  Vec expected = by.eigenvectors.col(1);
  expected /= expected.cwiseAbs().maxCoeff();
  if (expected.dot(f) < 0) expected = -expected;
  CHECK((f - expected).norm() < 1e-10);
  CHECK(f.cwiseAbs().maxCoeff() == doctest::Approx(1.0));

  const Mat r = testing::gaussian(6, 6, 134);
  CHECK((distortion_function(2.0 * r, by) - distortion_function(r, by)).norm() < 1e-10);
  CHECK_THROWS_AS(distortion_function(Mat::Identity(5, 5), by), ValidationError);
}

TEST_CASE("similarity matrix picks isometric copies") {
  // Space 0 and 1 are a rotated copy of each other; 2 and 3 are unrelated draws.
  const SyntheticPair a = synthetic_pair(200, 12, 0.0, 135);
  const Mat q = orthogonal(12, 136);
  std::vector<EmbeddingSet> spaces{a.x, EmbeddingSet::from_matrix(a.x.data * q.transpose(), a.x.ids),
                                   synthetic_pair(200, 12, 0.0, 137).x, EmbeddingSet::from_matrix(
                                                                             testing::gaussian(200, 12, 138))};
  SharedDescriptors shared;
  shared.anchors = {3, 50, 77, 120, 199};
  PipelineConfig cfg;
  cfg.k_e = 15;
  cfg.zoomout.enabled = false;
  const SimilarityMatrix m = similarity_matrix(spaces, shared, cfg, {1, 0, -1, -1});
  CHECK((m.scores - m.scores.transpose()).norm() < 1e-12);
  for (Index i = 0; i < 4; ++i) CHECK(m.scores(i, i) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(m.best_match[0] == 1);
  CHECK(m.best_match[1] == 0);
  CHECK(m.matching_accuracy == 1.0);
  CHECK(m.scores(0, 1) > m.scores(0, 2));
  CHECK_THROWS_AS(similarity_matrix({spaces[0]}, shared, cfg, {0}), ValidationError);
}
