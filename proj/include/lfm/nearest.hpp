#pragma once

#include "lfm/common.hpp"

#include <vector>

namespace lfm {

/// Index of the Euclidean-nearest row of `reference` for every row of `query`.
/// Exhaustive; ties go to the lowest reference index.
std::vector<Index> nearest_rows(const Mat& query, const Mat& reference);

}  // namespace lfm
