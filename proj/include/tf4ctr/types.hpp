#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tf4ctr {

#ifdef TF4CTR_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

// All numeric state is held in dense row-major matrices; an n-vector is an
// n x 1 matrix, a scalar is 1 x 1.
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatR = Mat<Real>;
using VecR = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using IdMat = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape mismatch between operands.
struct DimensionError : Error {
  using Error::Error;
};

// Value outside an operation's domain (log of non-positive, NaN produced).
struct DomainError : Error {
  using Error::Error;
};

// Lookup id outside a table's range.
struct IndexError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct CheckpointError : Error {
  using Error::Error;
};

// Metric undefined on the given input (e.g. single-class AUC).
struct MetricError : Error {
  using Error::Error;
};

}  // namespace tf4ctr
