#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace srlf {

using Vec3 = Eigen::Vector3d;

constexpr double kPi = std::numbers::pi;

/// Raised when an input violates a documented precondition (non-finite
/// values, malformed configuration, impossible parameters).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when the craft and an obstacle centre coincide and the barrier
/// direction is undefined.
class DegenerateGeometry : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace srlf
