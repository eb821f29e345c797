#pragma once

#include "lfm/common.hpp"
#include "lfm/correspondence.hpp"
#include "lfm/embedio.hpp"
#include "lfm/fmap.hpp"
#include "lfm/latgraph.hpp"

#include <string>

namespace lfm {

struct LinearTransform {
  enum class Kind { orthogonal, linear, affine };

  Kind kind = Kind::orthogonal;
  Mat matrix;  // d_Y x d_X
  Vec offset;  // d_Y, zero unless affine

  Index d_in() const { return matrix.cols(); }
  Index d_out() const { return matrix.rows(); }
  /// Maps each row x to M x + offset.
  Mat apply(const Mat& x) const;
};

std::string to_string(LinearTransform::Kind k);
LinearTransform::Kind parse_transform_kind(const std::string& s);

/// Fits on the assigned pairs (x_i, y_corr(i)). Orthogonal is Procrustes;
/// linear/affine are least squares with a relative 1e-8 ridge.
LinearTransform fit_transform(const Mat& x, const Mat& y, const Correspondence& corr, LinearTransform::Kind kind);
LinearTransform fit_transform(const EmbeddingSet& x, const EmbeddingSet& y, const Correspondence& corr,
                              LinearTransform::Kind kind);

/// C a, column by column.
Mat transfer_coefficients(const Mat& c, const Mat& a);

/// f(i) = d(x, node_i) under the metric, scaled to unit max.
Vec embed_as_distance_function(const Vec& x, const EmbeddingSet& nodes, Metric metric);
/// One distance function per row of `points`, as the columns of an n_nodes x n_points matrix.
Mat embed_as_distance_functions(const Mat& points, const EmbeddingSet& nodes, Metric metric);

}  // namespace lfm
