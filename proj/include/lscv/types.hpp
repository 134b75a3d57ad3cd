#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace lscv {

/// Upper bound on the parameter dimension. Vectors and matrices live on the
/// stack up to this size, which keeps the per-term likelihood loops free of
/// heap traffic.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Invalid user input or configuration. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a valid answer. Maps to CLI exit
/// code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The kernel-weighted design matrix of a local fit is singular.
class DegenerateWindow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The integrated squared bias B0 vanishes, so d_M** has no finite minimizer.
class DegenerateBias : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace lscv
