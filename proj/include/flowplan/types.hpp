#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace flowplan {

// Largest state/control dimension the solver supports (3-D space + time).
inline constexpr int kMaxDim = 4;
inline constexpr int kMaxVertices = kMaxDim + 1;

// Small vectors live on the stack: Eigen's MaxRows bound avoids heap traffic
// in the inner loops of the semi-Lagrangian sweeps.
using State = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Control = State;
using SmallMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

// Raised for malformed scenarios, unknown names and invalid solver settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a file cannot be read, parsed or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline State make_state(std::initializer_list<double> values) {
  State s(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) s(i++) = v;
  return s;
}

}  // namespace flowplan
