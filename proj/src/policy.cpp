#include "srlf/policy.hpp"

#include <cmath>
#include <sstream>

namespace srlf {

ActionVec action_scale() {
  ActionVec s;
  s << 5.0, 5.0, 5.0, kPi / 3.0;
  return s;
}

PolicyParams PolicyParams::zeros(int hidden) {
  return {Mlp({kObsDim, hidden, hidden, 2 * kActDim}),
          Mlp({kObsDim, hidden, hidden, 1})};
}

PolicyParams PolicyParams::random(std::mt19937_64& rng, int hidden,
                                  double init_log_std) {
  PolicyParams p = zeros(hidden);
  p.actor.init(rng, 0.01);
  p.critic.init(rng, 1.0);
  p.actor.layers().back().b.tail(kActDim).setConstant(init_log_std);
  return p;
}

std::pair<ActionVec, ActionVec> policy_head(const PolicyParams& params,
                                            const Observation& obs) {
  const Eigen::VectorXd out = params.actor.forward(obs);
  if (!out.allFinite()) {
    std::ostringstream os;
    os << "policy: non-finite actor output (actor params finite: "
       << params.actor.all_finite() << ", obs=" << obs.transpose() << ")";
    throw InvalidInput(os.str());
  }
  ActionVec mean = out.head<kActDim>();
  ActionVec log_std = out.tail<kActDim>().cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  return {mean, log_std};
}

double gaussian_log_prob(const ActionVec& raw, const ActionVec& mean,
                         const ActionVec& log_std) {
  const double log_2pi = std::log(2.0 * kPi);
  double lp = 0.0;
  for (int i = 0; i < kActDim; ++i) {
    const double z = (raw[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - 0.5 * log_2pi;
  }
  return lp;
}

double squash_log_jacobian(const ActionVec& raw) {
  const ActionVec sc = action_scale();
  double s = 0.0;
  for (int i = 0; i < kActDim; ++i) {
    // log(1 - tanh^2 x) = 2 (log 2 - x - softplus(-2x)), stable for large |x|.
    const double x = raw[i];
    const double softplus = std::max(-2.0 * x, 0.0) + std::log1p(std::exp(-std::abs(2.0 * x)));
    s += std::log(sc[i]) + 2.0 * (std::log(2.0) - x - softplus);
  }
  return s;
}

ControlCommand squash(const ActionVec& raw) {
  const ActionVec y = raw.array().tanh() * action_scale().array();
  return {y.head<3>(), y[3]};
}

ActionSample act(const PolicyParams& params, const Observation& obs,
                 bool deterministic, std::mt19937_64& rng) {
  if (!obs.allFinite()) throw InvalidInput("policy: non-finite observation");
  const auto [mean, log_std] = policy_head(params, obs);
  ActionSample a;
  if (deterministic) {
    a.raw = mean;
  } else {
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int i = 0; i < kActDim; ++i)
      a.raw[i] = mean[i] + std::exp(log_std[i]) * n01(rng);
  }
  a.command = squash(a.raw);
  a.gaussian_log_prob = gaussian_log_prob(a.raw, mean, log_std);
  a.log_prob = a.gaussian_log_prob - squash_log_jacobian(a.raw);
  return a;
}

double value(const PolicyParams& params, const Observation& obs) {
  return params.critic.forward(obs)(0, 0);
}

ControlCommand pd_baseline(const State& s, const Reference& ref,
                           const PdGains& gains, const SaturationLimits& lim) {
  ControlCommand c;
  c.accel = gains.kp * (ref.p - s.p) + gains.kv * (ref.v - s.v) + ref.a;
  c.yaw_rate = gains.kyaw * wrap_angle(ref.yaw - s.yaw);
  return saturate(c, lim);
}

}  // namespace srlf
