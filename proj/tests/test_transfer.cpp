#include "helpers.hpp"
#include "lfm/evalbench.hpp"
#include "lfm/fmap.hpp"
#include "lfm/pipeline.hpp"
#include "lfm/transfer.hpp"

#include <doctest.h>

#include <Eigen/QR>

using namespace lfm;

namespace {

Mat orthogonal(Index d, std::uint64_t seed) {
  Eigen::HouseholderQR<Mat> qr(testing::gaussian(d, d, seed));
  return qr.householderQ() * Mat::Identity(d, d);
}

struct IsoPair {
  SyntheticPair pair;
  SpaceModel sx, sy;
};

const IsoPair& iso_pair() {
  static const IsoPair p = [] {
    IsoPair out;
    out.pair = synthetic_pair(300, 16, 0.0, 101);
    PipelineConfig cfg;
    cfg.k_e = 30;
    cfg.zoomout.enabled = false;
    out.sx = build_space(out.pair.x, cfg);
    out.sy = build_space(out.pair.y, cfg);
    return out;
  }();
  return p;
}

}  // namespace

TEST_CASE("correspondence basics") {
  Correspondence c;
  c.assignment = {1, -1, 0};
  c.n_target = 2;
  CHECK(c.assigned() == 2);
  CHECK_FALSE(c.total());
  CHECK_NOTHROW(c.validate(false));
  CHECK_THROWS_AS(c.validate(true), ValidationError);
  c.assignment[1] = 2;
  CHECK_THROWS_AS(c.validate(false), ValidationError);

  AnchorSet a;
  a.pairs = {{0, 3}, {2, 1}};
  const Correspondence fa = Correspondence::from_anchors(a, 4, 5);
  CHECK(fa.assignment == std::vector<Index>{3, -1, 1, -1});
  CHECK(fa.source == Correspondence::Source::anchors);
  CHECK(fa.to_anchors().pairs == a.pairs);

  Correspondence truth = Correspondence::identity(4);
  Correspondence guess = Correspondence::identity(4);
  guess.assignment[2] = 0;
  CHECK(correspondence_accuracy(guess, truth) == 0.75);
  CHECK(parse_correspondence_source(to_string(Correspondence::Source::ground_truth)) ==
        Correspondence::Source::ground_truth);
}

TEST_CASE("orthogonal fit") {
  const Mat x = testing::gaussian(100, 8, 102);
  const auto id = Correspondence::identity(100);
  const LinearTransform self = fit_transform(x, x, id, LinearTransform::Kind::orthogonal);
  CHECK((self.matrix - Mat::Identity(8, 8)).norm() < 1e-8);
  CHECK(self.offset.isZero());

  const Mat q = orthogonal(8, 103);
  const LinearTransform t = fit_transform(x, x * q.transpose(), id, LinearTransform::Kind::orthogonal);
  CHECK((t.matrix - q).norm() < 1e-6);
  CHECK((t.matrix.transpose() * t.matrix - Mat::Identity(8, 8)).norm() < 1e-8);
  CHECK((t.apply(x) - x * q.transpose()).norm() < 1e-8);
}

TEST_CASE("fit uses only the assigned pairs, in correspondence order") {
  const Mat x = testing::gaussian(60, 5, 104);
  const Mat q = orthogonal(5, 105);
  // Y rows are a shuffled copy plus unrelated junk rows.
  Mat y = testing::gaussian(80, 5, 106);
  Correspondence c;
  c.n_target = 80;
  c.assignment.assign(60, -1);
  for (Index i = 0; i < 40; ++i) {
    const Index j = 79 - 2 * i;
    y.row(j) = x.row(i) * q.transpose();
    c.assignment[i] = j;
  }
  const LinearTransform t = fit_transform(x, y, c, LinearTransform::Kind::orthogonal);
  CHECK((t.matrix - q).norm() < 1e-8);
}

TEST_CASE("linear and affine fits recover the generator") {
  const Mat x = testing::gaussian(200, 6, 107);
  const Mat a = testing::gaussian(4, 6, 108);
  const Vec b = testing::gaussian(4, 1, 109);
  const auto id = Correspondence::identity(200);
  const Mat yl = x * a.transpose();
  const LinearTransform lin = fit_transform(x, yl, id, LinearTransform::Kind::linear);
  CHECK(lin.d_out() == 4);
  CHECK((lin.matrix - a).norm() < 1e-6);
  const Mat ya = yl.rowwise() + b.transpose();
  const LinearTransform aff = fit_transform(x, ya, id, LinearTransform::Kind::affine);
  CHECK((aff.matrix - a).norm() < 1e-6);
  CHECK((aff.offset - b).norm() < 1e-6);
  CHECK((aff.apply(x) - ya).norm() < 1e-5);
}

TEST_CASE("degenerate fits") {
  const auto id = Correspondence::identity(10);
  const Mat zero = Mat::Zero(10, 3);
  CHECK_THROWS_AS(fit_transform(zero, testing::gaussian(10, 3, 110), id, LinearTransform::Kind::linear),
                  ValidationError);
  const Mat constant = Mat::Ones(10, 3);
  CHECK_THROWS_AS(fit_transform(constant, testing::gaussian(10, 3, 111), id, LinearTransform::Kind::affine),
                  ValidationError);
  Correspondence none;
  none.assignment.assign(10, -1);
  none.n_target = 10;
  CHECK_THROWS_AS(fit_transform(testing::gaussian(10, 3, 112), testing::gaussian(10, 3, 113), none,
                                LinearTransform::Kind::orthogonal),
                  ValidationError);
  CHECK(parse_transform_kind("ortho") == LinearTransform::Kind::orthogonal);
  CHECK_THROWS_AS(parse_transform_kind("rigid"), ValidationError);
}

TEST_CASE("coefficient transfer") {
  const Mat c = testing::gaussian(7, 5, 114);
  const Mat a1 = testing::gaussian(5, 3, 115), a2 = testing::gaussian(5, 3, 116);
  CHECK((transfer_coefficients(c, a1 + a2) - transfer_coefficients(c, a1) - transfer_coefficients(c, a2)).norm() <
        1e-10);
  CHECK(transfer_coefficients(Mat::Identity(5, 5), a1) == a1);
  CHECK_THROWS_AS(transfer_coefficients(c, Mat::Ones(4, 1)), ValidationError);
}

TEST_CASE("ground-truth map pulls back low-frequency functions") {
  const IsoPair& p = iso_pair();
  const Correspondence& gt = p.pair.ground_truth;
  const FunctionalMap c = from_pointwise(p.sx.basis, p.sy.basis, gt);
  const Vec f = p.sx.basis.eigenvectors.leftCols(10) * testing::gaussian(10, 1, 117);
  const Vec g = reconstruct(p.sy.basis, transfer_coefficients(c.C, project(p.sx.basis, f)));
  Vec expected(p.sy.basis.n());
  for (Index i = 0; i < f.size(); ++i) expected(gt.assignment[i]) = f(i);
  CHECK((g - expected).norm() <= 0.05 * expected.norm());
}

TEST_CASE("extraction recovers the generating permutation on an isometric pair") {
  const IsoPair& p = iso_pair();
  const FunctionalMap c = from_pointwise(p.sx.basis, p.sy.basis, p.pair.ground_truth);
  const Correspondence e = extract_pointwise(c.C, p.sx.basis, p.sy.basis);
  CHECK(correspondence_accuracy(e, p.pair.ground_truth) >= 0.99);
}

TEST_CASE("distance functions") {
  const EmbeddingSet nodes = EmbeddingSet::from_matrix(testing::gaussian(20, 4, 118));
  for (Metric m : {Metric::angular, Metric::euclidean}) {
    const Vec x = nodes.data.row(6);
    const Vec f = embed_as_distance_function(x, nodes, m);
    CHECK(std::abs(f(6)) < 1e-7);
    Vec oracle(20);
    for (Index i = 0; i < 20; ++i) oracle(i) = metric_distance(m, x, nodes.data.row(i).transpose());
    oracle /= oracle.maxCoeff();
    CHECK((f - oracle).cwiseAbs().maxCoeff() < 1e-12);
  }
  const Mat pts = testing::gaussian(3, 4, 119);
  const Mat many = embed_as_distance_functions(pts, nodes, Metric::euclidean);
  CHECK(many.rows() == 20);
  CHECK(many.cols() == 3);
  CHECK((many.col(1) - embed_as_distance_function(pts.row(1).transpose(), nodes, Metric::euclidean)).norm() < 1e-14);
  CHECK_THROWS_AS(embed_as_distance_function(Vec::Zero(4), nodes, Metric::angular), ValidationError);
  CHECK_THROWS_AS(embed_as_distance_function(Vec::Ones(3), nodes, Metric::euclidean), ValidationError);
}

TEST_CASE("distance functions are permutation equivariant") {
  const Mat x = testing::gaussian(15, 3, 120);
  Mat px = x;
  px.row(2).swap(px.row(9));
  const Vec q = testing::gaussian(3, 1, 121);
  const Vec a = embed_as_distance_function(q, EmbeddingSet::from_matrix(x), Metric::euclidean);
  Vec b = embed_as_distance_function(q, EmbeddingSet::from_matrix(px), Metric::euclidean);
  std::swap(b(2), b(9));
  CHECK((a - b).norm() < 1e-14);
}
