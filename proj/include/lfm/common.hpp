#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace lfm {

using Index = Eigen::Index;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SpMat = Eigen::SparseMatrix<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, invalid configs, violated preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed to reach its tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Worker-count cap used by parallel_for. Results never depend on it.
void set_num_threads(int n);
int num_threads();

/// Runs fn(i) for i in [begin, end). Each index is processed independently,
/// so the output is identical for any thread count.
void parallel_for(Index begin, Index end, const std::function<void(Index)>& fn);

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace lfm
