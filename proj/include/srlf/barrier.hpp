#pragma once

#include <span>
#include <vector>

#include "srlf/dynamics.hpp"

namespace srlf {

struct Obstacle {
  Vec3 center = Vec3::Zero();
  double radius = 0.1;
  Vec3 velocity = Vec3::Zero();
};

struct BarrierParams {
  double delta = 5.0;             // maximum braking acceleration [m/s^2]
  double safety_distance = 0.15;  // D_s [m]
  double rho = 10.0;              // log-sum-exp sharpness
  double gamma = 1.0;             // alpha(b) = gamma * b^3
  double d_bar = 1.0;             // disturbance bound used for margins

  /// Equilibrium of gamma * b^3 = d_bar^2 / 4, the depth by which b may
  /// settle below zero under a bounded disturbance.
  double margin() const;
  double alpha(double b) const { return gamma * b * b * b; }
  void validate() const;
};

/// Gap ||dp|| - D_s at or below which an evaluation is flagged. The radical
/// itself is clamped at zero so that b_i vanishes on the shell.
inline constexpr double kRadicalFloor = 1e-9;
/// Floor applied to sqrt(2 delta (||dp|| - D_s)) when it appears as a
/// denominator.
inline constexpr double kRadicalDenominatorFloor = 1e-4;
/// Below this centre distance the barrier direction is undefined.
inline constexpr double kCoincidentDistance = 1e-9;

/// Braking-distance barrier for a single spherical obstacle:
///   sqrt(2 delta max(||dp|| - D_s, 0)) + dp^T dv / ||dp||
/// with dp = p_i - p and dv = v_i - v. Sets *floored when the gap is within
/// kRadicalFloor of the shell or inside it. Throws DegenerateGeometry when the centres coincide.
double barrier_i(const State& s, const Obstacle& o, const BarrierParams& p,
                 bool* floored = nullptr);

/// Numerically stable smooth minimum -(1/rho) ln sum exp(-rho b_i).
double compose(std::span<const double> b_values, double rho);

/// Every quantity the filter needs from the barrier at one state.
struct BarrierEval {
  std::vector<double> b_i;
  std::vector<Vec3> dp;
  std::vector<Vec3> dv;
  double b = 0.0;
  /// sum_i exp(-rho b_i), unshifted.
  double e_bar = 0.0;
  /// The drift aggregate exactly as printed for the literal constraint form
  /// (includes the per-obstacle unit self-product term).
  double e_hat = 0.0;
  /// exp(-rho b_i) * dp_i^T / ||dp_i||, one row per obstacle.
  std::vector<Vec3> e_tilde;
  /// Normalised weights exp(-rho b_i) / e_bar.
  std::vector<double> weight;
  /// Per-obstacle drift derivative d b_i / dt at zero control.
  std::vector<double> drift_i;
  double lf_b = 0.0;
  Vec3 lg_b = Vec3::Zero();
  /// RCBF gain L_g b^T, the weighted combination of the control rows.
  Vec3 gain = Vec3::Zero();
  /// Some obstacle sits at or inside D_s; derivatives were regularised.
  bool near_singular = false;

  double min_b_i() const;
};

/// Analytic Lie derivatives of the composed barrier along
/// p' = v, v' = u + mu (obstacles move at constant velocity).
/// Requires a non-empty obstacle list.
BarrierEval lie_terms(const State& s, std::span<const Obstacle> obstacles,
                      const BarrierParams& p);

Vec3 rcbf_gain(const State& s, std::span<const Obstacle> obstacles,
               const BarrierParams& p);

enum class Region { kInterior, kBoundary, kExpanded, kOutside };

const char* to_string(Region r);

/// Locates the state relative to C = {b >= 0} and the expanded set
/// {b >= -margin}. An empty obstacle list is interior.
Region classify(const State& s, std::span<const Obstacle> obstacles,
                const BarrierParams& p, double tol = 1e-9);
Region classify_value(double b, const BarrierParams& p, double tol = 1e-9);

}  // namespace srlf
