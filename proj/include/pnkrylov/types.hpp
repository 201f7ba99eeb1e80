#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pnk {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Aᵀb vanishes, or the data is otherwise unusable (e.g. ‖b‖ ≤ σ).
class DegenerateProblem : public Error {
 public:
  using Error::Error;
};

/// No regularization parameter on the search interval meets the discrepancy target.
class DiscrepancyUnreachable : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require_dim(bool ok, const std::string& what) {
  if (!ok) throw InvalidDimension(what);
}

inline void require_param(bool ok, const std::string& what) {
  if (!ok) throw InvalidParameter(what);
}

}  // namespace detail
}  // namespace pnk
