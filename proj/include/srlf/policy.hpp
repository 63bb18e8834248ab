#pragma once

#include "srlf/env.hpp"
#include "srlf/mlp.hpp"

namespace srlf {

inline constexpr int kActDim = 4;
using ActionVec = Eigen::Matrix<double, kActDim, 1>;

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Per-dimension command scale applied after tanh: +-5 m/s^2 per
/// acceleration axis and +-pi/3 rad/s yaw rate.
ActionVec action_scale();

/// Gaussian actor (mean and log-std heads) and scalar value critic.
struct PolicyParams {
  Mlp actor;
  Mlp critic;

  static PolicyParams zeros(int hidden = 128);
  static PolicyParams random(std::mt19937_64& rng, int hidden = 128,
                             double init_log_std = -0.5);
  bool all_finite() const { return actor.all_finite() && critic.all_finite(); }
};

struct ActionSample {
  ControlCommand command;
  ActionVec raw;           // pre-tanh Gaussian sample
  double log_prob = 0.0;   // density of `command`, including tanh and scale
  double gaussian_log_prob = 0.0;  // density of `raw`
};

/// Mean and clamped log-std heads for one observation.
std::pair<ActionVec, ActionVec> policy_head(const PolicyParams& params,
                                            const Observation& obs);

double gaussian_log_prob(const ActionVec& raw, const ActionVec& mean,
                         const ActionVec& log_std);
/// log |d command / d raw| = sum log(scale (1 - tanh^2 raw)).
double squash_log_jacobian(const ActionVec& raw);
ControlCommand squash(const ActionVec& raw);

ActionSample act(const PolicyParams& params, const Observation& obs,
                 bool deterministic, std::mt19937_64& rng);

double value(const PolicyParams& params, const Observation& obs);

struct PdGains {
  double kp = 4.0;
  double kv = 4.0;
  double kyaw = 2.0;
};

/// Feedback plus feed-forward tracking law, saturated to `lim`.
ControlCommand pd_baseline(const State& s, const Reference& ref,
                           const PdGains& gains = {},
                           const SaturationLimits& lim =
                               SaturationLimits::literal_box());

}  // namespace srlf
