#include "srlf/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace srlf {

double BarrierParams::margin() const {
  return std::cbrt(d_bar * d_bar / (4.0 * gamma));
}

void BarrierParams::validate() const {
  if (!(delta > 0.0)) throw InvalidInput("barrier: delta must be positive");
  if (!(safety_distance > 0.0))
    throw InvalidInput("barrier: safety distance must be positive");
  if (!(rho > 0.0)) throw InvalidInput("barrier: rho must be positive");
  if (!(gamma > 0.0)) throw InvalidInput("barrier: gamma must be positive");
  if (!(d_bar >= 0.0)) throw InvalidInput("barrier: d_bar must be >= 0");
}

namespace {

struct Relative {
  Vec3 dp;
  Vec3 dv;
  double dist;
};

Relative relative(const State& s, const Obstacle& o) {
  Relative r{o.center - s.p, o.velocity - s.v, 0.0};
  r.dist = r.dp.norm();
  if (!(r.dist >= kCoincidentDistance))
    throw DegenerateGeometry("barrier: craft coincides with obstacle centre");
  return r;
}

}  // namespace

double barrier_i(const State& s, const Obstacle& o, const BarrierParams& p,
                 bool* floored) {
  const Relative r = relative(s, o);
  const double gap = r.dist - p.safety_distance;
  const bool clipped = gap <= kRadicalFloor;
  if (floored) *floored = clipped;
  const double root = std::sqrt(2.0 * p.delta * std::max(gap, 0.0));
  return root + r.dp.dot(r.dv) / r.dist;
}

double compose(std::span<const double> b_values, double rho) {
  if (b_values.empty()) throw InvalidInput("compose: empty barrier list");
  const double lo = *std::min_element(b_values.begin(), b_values.end());
  // exp(-rho (b_i - lo)) <= 1; the minimum contributes exactly 1, so
  // log1p over the remaining terms keeps tiny tails.
  double rest = 0.0;
  bool skipped = false;
  for (double b : b_values) {
    if (!skipped && b == lo) {
      skipped = true;
      continue;
    }
    rest += std::exp(-rho * (b - lo));
  }
  return lo - std::log1p(rest) / rho;
}

double BarrierEval::min_b_i() const {
  if (b_i.empty()) return std::numeric_limits<double>::infinity();
  return *std::min_element(b_i.begin(), b_i.end());
}

BarrierEval lie_terms(const State& s, std::span<const Obstacle> obstacles,
                      const BarrierParams& p) {
  if (obstacles.empty()) throw InvalidInput("lie_terms: no obstacles");
  const std::size_t n = obstacles.size();
  BarrierEval e;
  e.b_i.resize(n);
  e.dp.resize(n);
  e.dv.resize(n);
  e.e_tilde.resize(n);
  e.weight.resize(n);
  e.drift_i.resize(n);

  std::vector<Vec3> unit(n);
  std::vector<double> literal_drift(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Relative r = relative(s, obstacles[i]);
    const double gap = r.dist - p.safety_distance;
    if (gap <= kRadicalFloor) e.near_singular = true;
    const double root = std::sqrt(2.0 * p.delta * std::max(gap, 0.0));
    const double closing = r.dp.dot(r.dv);
    const double root_den = std::max(root, kRadicalDenominatorFloor);

    e.dp[i] = r.dp;
    e.dv[i] = r.dv;
    unit[i] = r.dp / r.dist;
    e.b_i[i] = root + closing / r.dist;

    const double d_root = p.delta * closing / (root_den * r.dist);
    const double d_proj = r.dv.squaredNorm() / r.dist -
                          closing * closing / (r.dist * r.dist * r.dist);
    e.drift_i[i] = d_root + d_proj;
    literal_drift[i] = d_root + d_proj + r.dp.squaredNorm() / (r.dist * r.dist);
  }

  e.b = compose(e.b_i, p.rho);
  const double lo = e.min_b_i();
  double shifted_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    e.weight[i] = std::exp(-p.rho * (e.b_i[i] - lo));
    shifted_sum += e.weight[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    e.weight[i] /= shifted_sum;
    // d b_i / d v = -dp_i^T / ||dp_i|| since dv_i = v_i - v.
    e.lf_b += e.weight[i] * e.drift_i[i];
    e.lg_b -= e.weight[i] * unit[i];

    const double raw = std::exp(-p.rho * e.b_i[i]);
    e.e_bar += raw;
    e.e_hat += raw * literal_drift[i];
    e.e_tilde[i] = raw * unit[i];
  }
  e.gain = e.lg_b;
  return e;
}

Vec3 rcbf_gain(const State& s, std::span<const Obstacle> obstacles,
               const BarrierParams& p) {
  return lie_terms(s, obstacles, p).gain;
}

const char* to_string(Region r) {
  switch (r) {
    case Region::kInterior: return "interior";
    case Region::kBoundary: return "boundary";
    case Region::kExpanded: return "expanded";
    case Region::kOutside: return "outside";
  }
  return "?";
}

Region classify_value(double b, const BarrierParams& p, double tol) {
  if (std::abs(b) <= tol) return Region::kBoundary;
  if (b > 0.0) return Region::kInterior;
  if (b >= -p.margin()) return Region::kExpanded;
  return Region::kOutside;
}

Region classify(const State& s, std::span<const Obstacle> obstacles,
                const BarrierParams& p, double tol) {
  if (obstacles.empty()) return Region::kInterior;
  std::vector<double> values;
  values.reserve(obstacles.size());
  for (const Obstacle& o : obstacles) values.push_back(barrier_i(s, o, p));
  return classify_value(compose(values, p.rho), p, tol);
}

}  // namespace srlf
