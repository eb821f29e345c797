#include "lfm/nearest.hpp"

#include <algorithm>
#include <limits>

namespace lfm {

std::vector<Index> nearest_rows(const Mat& query, const Mat& reference) {
  require(query.cols() == reference.cols(), "nearest_rows: query has " + std::to_string(query.cols()) +
                                                " columns, reference has " + std::to_string(reference.cols()));
  require(reference.rows() >= 1, "nearest_rows: empty reference set");
  const Index nq = query.rows(), nr = reference.rows();
  const RowMat ref = reference;
  const Vec ref_sq = reference.rowwise().squaredNorm();
  const double ref_max = ref_sq.maxCoeff();

  std::vector<Index> out(nq, -1);
  constexpr Index kBlock = 256;
  const Index blocks = (nq + kBlock - 1) / kBlock;
  parallel_for(0, blocks, [&](Index b) {
    const Index r0 = b * kBlock, rows = std::min(kBlock, nq - r0);
    const RowMat q = query.middleRows(r0, rows);
    // Ranking keys ||r||^2 - 2 q.r; exact distances settle anything within rounding of the minimum.
    Mat keys = -2.0 * (q * ref.transpose());
    keys.rowwise() += ref_sq.transpose();
    for (Index i = 0; i < rows; ++i) {
      const double best_key = keys.row(i).minCoeff();
      const double slack = 1e-9 * (q.row(i).squaredNorm() + ref_max) + std::numeric_limits<double>::min();
      Index best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < nr; ++j) {
        if (keys(i, j) > best_key + slack) continue;
        const double d = (q.row(i) - ref.row(j)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      out[r0 + i] = best;
    }
  });
  return out;
}

}  // namespace lfm
