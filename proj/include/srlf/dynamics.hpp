#pragma once

#include <cstdint>
#include <random>

#include "srlf/types.hpp"

namespace srlf {

/// Flat multicopter state: position, velocity, yaw and simulation time.
struct State {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double yaw = 0.0;
  double t = 0.0;
};

/// Acceleration command plus yaw-rate command.
struct ControlCommand {
  Vec3 accel = Vec3::Zero();
  double yaw_rate = 0.0;
};

enum class DisturbanceKind { kNone, kUniform, kConstant };

struct DisturbanceModel {
  double d_bar = 1.0;
  DisturbanceKind kind = DisturbanceKind::kUniform;
  Vec3 constant = Vec3::Zero();  // used by kConstant; must satisfy |.|_inf <= d_bar
  std::uint64_t seed = 0;

  void validate() const;
};

using Rng = std::mt19937_64;

/// Draws one additive input disturbance. Uniform draws are i.i.d. per
/// component in [-d_bar, d_bar].
Vec3 sample_disturbance(const DisturbanceModel& m, Rng& rng);

struct SaturationLimits {
  Vec3 u_min;
  Vec3 u_max;
  double u_norm_max = 5.0;
  double w_max = kPi / 3.0;

  /// Box inscribed in the norm ball: |u_i| <= norm / sqrt(3).
  static SaturationLimits inscribed(double norm_max = 5.0,
                                    double w_max = kPi / 3.0);
  /// Literal per-axis box of half-width `norm_max` (norm still enforced).
  static SaturationLimits literal_box(double norm_max = 5.0,
                                      double w_max = kPi / 3.0);

  void validate() const;
};

/// Clips to the box, scales radially onto the norm ball, clamps the yaw rate.
/// Idempotent; the result satisfies both bounds exactly.
ControlCommand saturate(const ControlCommand& c, const SaturationLimits& lim);

/// Semi-implicit Euler step of the double integrator plus yaw integrator.
State step(const State& s, const ControlCommand& c, const Vec3& mu, double dt);

}  // namespace srlf
