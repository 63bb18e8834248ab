#include "srlf/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace srlf {

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

void DisturbanceModel::validate() const {
  if (!(d_bar >= 0.0) || !std::isfinite(d_bar))
    throw InvalidInput("disturbance bound d_bar must be finite and >= 0");
  if (kind == DisturbanceKind::kConstant &&
      !(constant.allFinite() && constant.cwiseAbs().maxCoeff() <= d_bar))
    throw InvalidInput("constant disturbance exceeds d_bar");
}

Vec3 sample_disturbance(const DisturbanceModel& m, Rng& rng) {
  switch (m.kind) {
    case DisturbanceKind::kNone:
      return Vec3::Zero();
    case DisturbanceKind::kConstant:
      return m.constant;
    case DisturbanceKind::kUniform: {
      if (m.d_bar == 0.0) return Vec3::Zero();
      std::uniform_real_distribution<double> dist(-m.d_bar, m.d_bar);
      Vec3 mu;
      for (int i = 0; i < 3; ++i) mu[i] = dist(rng);
      return mu;
    }
  }
  return Vec3::Zero();
}

SaturationLimits SaturationLimits::inscribed(double norm_max, double w_max) {
  const double half = norm_max / std::sqrt(3.0);
  return {Vec3::Constant(-half), Vec3::Constant(half), norm_max, w_max};
}

SaturationLimits SaturationLimits::literal_box(double norm_max, double w_max) {
  return {Vec3::Constant(-norm_max), Vec3::Constant(norm_max), norm_max,
          w_max};
}

void SaturationLimits::validate() const {
  if (!(u_min.array() < u_max.array()).all())
    throw InvalidInput("saturation box requires u_min < u_max elementwise");
  if (!(u_norm_max > 0.0)) throw InvalidInput("u_norm_max must be positive");
  if (!(w_max > 0.0)) throw InvalidInput("w_max must be positive");
  if ((u_min.array() > 0.0).any() || (u_max.array() < 0.0).any())
    throw InvalidInput("saturation box must contain the origin");
}

ControlCommand saturate(const ControlCommand& c, const SaturationLimits& lim) {
  ControlCommand out;
  out.accel = c.accel.cwiseMax(lim.u_min).cwiseMin(lim.u_max);
  const double n = out.accel.norm();
  if (n > lim.u_norm_max) {
    out.accel *= lim.u_norm_max / n;
    // Rounding can leave the norm an ulp above the bound.
    while (out.accel.norm() > lim.u_norm_max) out.accel *= 1.0 - 1e-15;
  }
  out.yaw_rate = std::clamp(c.yaw_rate, -lim.w_max, lim.w_max);
  return out;
}

State step(const State& s, const ControlCommand& c, const Vec3& mu, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw InvalidInput("step: dt must be positive and finite");
  if (!s.p.allFinite() || !s.v.allFinite() || !std::isfinite(s.yaw) ||
      !std::isfinite(s.t) || !c.accel.allFinite() ||
      !std::isfinite(c.yaw_rate) || !mu.allFinite()) {
    std::ostringstream os;
    os << "step: non-finite input (p=" << s.p.transpose()
       << ", v=" << s.v.transpose() << ", yaw=" << s.yaw
       << ", accel=" << c.accel.transpose() << ", w=" << c.yaw_rate
       << ", mu=" << mu.transpose() << ")";
    throw InvalidInput(os.str());
  }
  State n;
  n.v = s.v + (c.accel + mu) * dt;
  n.p = s.p + n.v * dt;
  n.yaw = wrap_angle(s.yaw + c.yaw_rate * dt);
  n.t = s.t + dt;
  return n;
}

}  // namespace srlf
