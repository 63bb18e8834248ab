#include "srlf/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "srlf/env.hpp"
#include "srlf/filter.hpp"
#include "srlf/oracles.hpp"

namespace srlf {

namespace {

SuiteResult finish(std::string name, long cases, double worst, double threshold,
                   std::string detail = {}) {
  return {std::move(name), cases, worst, threshold, worst <= threshold,
          std::move(detail)};
}

/// Random state plus 1..5 obstacles anywhere nearby (inside D_s allowed).
std::pair<State, std::vector<Obstacle>> random_cloud(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> count(1, 5);
  State s;
  s.p = Vec3(u(rng), u(rng), u(rng));
  s.v = Vec3(u(rng), u(rng), u(rng));
  std::vector<Obstacle> obs(count(rng));
  for (Obstacle& o : obs) {
    o.center = Vec3(u(rng), u(rng), u(rng));
    o.velocity = 0.25 * Vec3(u(rng), u(rng), u(rng));
  }
  return {s, obs};
}

}  // namespace

SuiteResult check_lse_bound(long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const BarrierParams p;
  double worst_violation = 0.0;
  double worst_gap_excess = -1.0;
  for (long k = 0; k < n; ++k) {
    auto [s, obs] = random_cloud(rng);
    std::vector<double> bi;
    for (const Obstacle& o : obs) bi.push_back(barrier_i(s, o, p));
    const double b = compose(bi, p.rho);
    const double lo = *std::min_element(bi.begin(), bi.end());
    worst_violation = std::max(worst_violation, b - lo);
    const double bound = std::log(static_cast<double>(bi.size())) / p.rho;
    worst_gap_excess = std::max(worst_gap_excess, (lo - b) - bound);
  }
  std::ostringstream os;
  os << "max(b - min b_i)=" << worst_violation
     << " max(gap - ln(M)/rho)=" << worst_gap_excess;
  // b <= min b_i must hold with zero violation.
  SuiteResult r = finish("lse_bound", n, std::max(worst_violation, 0.0), 0.0, os.str());
  r.pass = r.pass && worst_gap_excess <= 1e-12;
  return r;
}

SuiteResult check_lie_derivatives(long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const BarrierParams p;
  double worst = 0.0;
  long cases = 0;
  while (cases < n) {
    const oracle::Scenario sc = oracle::random_scenario(rng, p, 0.05);
    std::vector<Obstacle> obs = sc.obstacles;
    for (Obstacle& o : obs) o.velocity = 0.2 * Vec3(u(rng), u(rng), u(rng)) / 3.0;
    const Vec3 acc(u(rng), u(rng), u(rng));
    const BarrierEval e = lie_terms(sc.state, obs, p);
    if (e.near_singular) continue;
    const double analytic = barrier_rate(e, acc);
    const double fd = oracle::barrier_rate_fd(sc.state, obs, p, acc, 1e-5);
    worst = std::max(worst, std::abs(fd - analytic) / std::max(std::abs(analytic), 1.0));
    ++cases;
  }
  return finish("lie_derivatives", cases, worst, 1e-4,
                "|fd - analytic| / max(|analytic|, 1), central difference h=1e-5");
}

SuiteResult check_gain(long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const BarrierParams p;
  double worst_norm = 0.0, worst_product = 0.0;
  for (long k = 0; k < n; ++k) {
    const oracle::Scenario sc = oracle::random_scenario(rng, p, 0.0, 5);
    const BarrierEval e = lie_terms(sc.state, sc.obstacles, p);
    worst_norm = std::max(worst_norm, e.gain.norm() - 1.0);
    worst_product = std::max(worst_product,
                             std::abs(e.lg_b.dot(e.gain) - e.lg_b.squaredNorm()));
  }
  std::ostringstream os;
  os << "max(|gain| - 1)=" << worst_norm << " max|Lg.gain - |Lg|^2|=" << worst_product;
  return finish("gain_bounds", n, std::max(std::max(worst_norm, 0.0), worst_product),
                1e-12, os.str());
}

namespace {

struct OracleTally {
  double pg_gap = 0.0;
  double grid_excess = 0.0;   // grid objective above the solver, beyond tolerance
  double grid_beats = 0.0;    // grid objective below the solver
  double kkt = 0.0;
  long cases = 0;
  long skipped = 0;

  void add(const QpProblem& prob, const QpSolution& sol, const Eigen::VectorXd& lo,
           const Eigen::VectorXd& hi, double step) {
    const double f = objective(prob, sol.z);
    const oracle::DualResult pg = oracle::projected_gradient(prob);
    pg_gap = std::max(pg_gap, std::abs(objective(prob, pg.z) - f));
    const oracle::GridResult grid = oracle::grid_search(prob, lo, hi, step);
    const double resolution =
        10.0 * step * ((sol.z + prob.q).norm() + 1.0) + step * step;
    if (grid.feasible) {
      grid_excess = std::max(grid_excess, grid.objective - f - resolution);
      grid_beats = std::max(grid_beats, f - grid.objective);
    } else {
      grid_excess = std::max(grid_excess, 1.0);
    }
    kkt = std::max(kkt, kkt_check(prob, sol).max());
    ++cases;
  }

  SuiteResult result(std::string name, double step) const {
    std::ostringstream os;
    os << "pg_gap=" << pg_gap << " grid_excess=" << grid_excess
       << " grid_beats=" << grid_beats << " kkt=" << kkt << " step=" << step
       << " skipped_infeasible=" << skipped;
    SuiteResult r = finish(std::move(name), cases, pg_gap, 1e-5, os.str());
    r.pass = r.pass && grid_excess <= 0.0 && grid_beats <= 1e-9 && kkt < 1e-8;
    return r;
  }
};

}  // namespace

SuiteResult check_filter_qp_oracle(long n, std::uint64_t seed, double grid_step) {
  std::mt19937_64 rng(seed);
  FilterConfig cfg;
  OracleTally tally;
  while (tally.cases < n) {
    const oracle::Scenario sc = oracle::random_scenario(rng, cfg.barrier);
    const BarrierEval e = lie_terms(sc.state, sc.obstacles, cfg.barrier);
    const QpProblem prob = assemble(&e, sc.u_r, cfg);
    const QpSolution sol = solve(prob);
    if (sol.status != QpStatus::kOptimal) {
      ++tally.skipped;
      continue;
    }
    const Vec3 shift = sc.u_r + e.gain;
    tally.add(prob, sol, cfg.limits.u_min - shift, cfg.limits.u_max - shift, grid_step);
  }
  return tally.result("filter_qp_oracle", grid_step);
}

SuiteResult check_generic_qp_oracle(long n, std::uint64_t seed, double grid_step) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> rows(1, 7);
  OracleTally tally;
  while (tally.cases < n) {
    const QpProblem prob = oracle::random_feasible_qp(rng, 3, rows(rng));
    const QpSolution sol = solve(prob);
    if (sol.status != QpStatus::kOptimal) {
      ++tally.skipped;
      continue;
    }
    // Search window centred on the oracle's answer, not the solver's.
    const Eigen::VectorXd centre = oracle::projected_gradient(prob).z;
    tally.add(prob, sol, centre.array() - 0.1, centre.array() + 0.1, grid_step);
  }
  return tally.result("generic_qp_oracle", grid_step);
}

SuiteResult check_qp_permutation(long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> rows(1, 7);
  double worst = 0.0;
  for (long k = 0; k < n; ++k) {
    const QpProblem prob = oracle::random_feasible_qp(rng, 3, rows(rng));
    std::vector<int> perm(prob.num_rows());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    QpProblem shuffled(3);
    shuffled.q = prob.q;
    for (int j : perm) shuffled.add_row(prob.G.row(j), prob.h[j]);
    const QpSolution a = solve(prob), b = solve(shuffled);
    worst = std::max(worst, (a.z - b.z).lpNorm<Eigen::Infinity>());
  }
  return finish("qp_permutation", n, worst, 1e-10);
}

SuiteResult check_qp_monotone(long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> rows(1, 7);
  double worst = 0.0;
  for (long k = 0; k < n; ++k) {
    const QpProblem prob = oracle::random_feasible_qp(rng, 3, rows(rng));
    const QpSolution sol = solve(prob);
    for (std::size_t i = 1; i < sol.objective_trace.size(); ++i)
      worst = std::max(worst, sol.objective_trace[i - 1] - sol.objective_trace[i]);
  }
  return finish("qp_objective_monotone", n, worst, 1e-12,
                "largest objective decrease between iterations (dual method: non-decreasing)");
}

SuiteResult check_filter_certificate(long n, std::uint64_t seed, int mu_samples) {
  std::mt19937_64 rng(seed);
  FilterConfig cfg;
  const double d = cfg.barrier.d_bar;
  std::uniform_real_distribution<double> mu_dist(-d, d);
  double worst_nominal = 0.0, worst_robust = 0.0, worst_box = 0.0;
  long cases = 0, relaxed = 0;
  while (cases < n) {
    const oracle::Scenario sc = oracle::random_scenario(rng, cfg.barrier);
    const FilterOutcome out = filter(sc.state, sc.obstacles, {sc.u_r, 0.0}, cfg);
    if (out.status != FilterStatus::kOptimal) {
      ++relaxed;
      continue;
    }
    const BarrierEval& e = *out.eval;
    const double floor = -cfg.barrier.alpha(e.b);
    const Vec3 u = out.u_final.accel;
    worst_nominal = std::max(worst_nominal, floor - barrier_rate(e, u));
    const double robust_floor = floor - 0.25 * d * d;
    for (int k = 0; k < mu_samples; ++k) {
      const Vec3 mu(mu_dist(rng), mu_dist(rng), mu_dist(rng));
      worst_robust = std::max(worst_robust, robust_floor - barrier_rate(e, u + mu));
    }
    // The worst corner of the disturbance box.
    const Vec3 corner = -d * e.lg_b.array().sign().matrix();
    worst_robust = std::max(worst_robust, robust_floor - barrier_rate(e, u + corner));
    worst_box = std::max({worst_box, (u - cfg.limits.u_max).maxCoeff(),
                          (cfg.limits.u_min - u).maxCoeff(),
                          u.norm() - cfg.limits.u_norm_max});
    ++cases;
  }
  std::ostringstream os;
  os << "nominal=" << worst_nominal << " robust=" << worst_robust
     << " box=" << worst_box << " relaxed_skipped=" << relaxed;
  SuiteResult r = finish("filter_certificate", cases,
                         std::max(worst_nominal, worst_robust), 1e-9, os.str());
  r.pass = r.pass && worst_box <= 0.0;
  return r;
}

SuiteResult check_filter_passthrough(long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FilterConfig cfg;
  cfg.enabled = false;
  double worst = 0.0;
  for (long k = 0; k < n; ++k) {
    const oracle::Scenario sc = oracle::random_scenario(rng, cfg.barrier);
    const ControlCommand u_r{2.5 * sc.u_r, 3.0 * (sc.u_r.x() / 3.0)};
    const FilterOutcome out = filter(sc.state, sc.obstacles, u_r, cfg);
    const ControlCommand expect = saturate(u_r, cfg.limits);
    worst = std::max({worst, (out.u_final.accel - expect.accel).lpNorm<Eigen::Infinity>(),
                      std::abs(out.u_final.yaw_rate - expect.yaw_rate),
                      out.u_f.lpNorm<Eigen::Infinity>(), out.gain.lpNorm<Eigen::Infinity>()});
  }
  return finish("filter_passthrough", n, worst, 0.0);
}

SuiteResult check_filter_idempotence(long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FilterConfig cfg;
  double worst = 0.0;
  long cases = 0;
  while (cases < n) {
    const oracle::Scenario sc = oracle::random_scenario(rng, cfg.barrier);
    const FilterOutcome first = filter(sc.state, sc.obstacles, {sc.u_r, 0.0}, cfg);
    if (first.status != FilterStatus::kOptimal) continue;
    const FilterOutcome again = filter(sc.state, sc.obstacles, {first.u_s, 0.0}, cfg);
    worst = std::max(worst, again.u_f.norm());
    ++cases;
  }
  return finish("filter_idempotence", cases, worst, 1e-8);
}

SuiteResult check_saturation(long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  double worst = 0.0;
  for (const SaturationLimits& lim :
       {SaturationLimits::inscribed(), SaturationLimits::literal_box()}) {
    for (long k = 0; k < n; ++k) {
      const ControlCommand c{Vec3(u(rng), u(rng), u(rng)), u(rng)};
      const ControlCommand s = saturate(c, lim);
      const ControlCommand twice = saturate(s, lim);
      worst = std::max({worst, (s.accel - lim.u_max).maxCoeff(),
                        (lim.u_min - s.accel).maxCoeff(),
                        s.accel.norm() - lim.u_norm_max,
                        std::abs(s.yaw_rate) - lim.w_max,
                        (twice.accel - s.accel).lpNorm<Eigen::Infinity>(),
                        std::abs(twice.yaw_rate - s.yaw_rate)});
    }
  }
  return finish("saturation", 2 * n, std::max(worst, 0.0), 0.0);
}

SuiteResult check_dynamics_consistency(long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  constexpr double dt = 1e-3;
  double worst = 0.0;
  for (long k = 0; k < n; ++k) {
    const State s{Vec3(u(rng), u(rng), 1.0 + u(rng)), Vec3(u(rng), u(rng), u(rng)), 0.0, 0.0};
    Vec3 a(u(rng), u(rng), u(rng));
    if (a.norm() > 1.0) a.normalize();
    const ControlCommand c{a, 0.0};
    const State one = step(s, c, Vec3::Zero(), dt);
    const State two = step(step(s, c, Vec3::Zero(), dt / 2), c, Vec3::Zero(), dt / 2);
    const Vec3 p_exact = s.p + s.v * dt + 0.5 * a * dt * dt;
    const Vec3 v_exact = s.v + a * dt;
    worst = std::max({worst, (one.p - p_exact).norm(), (two.p - p_exact).norm(),
                      (one.p - two.p).norm(), (one.v - v_exact).norm(),
                      (two.v - v_exact).norm()});
  }
  return finish("dynamics_consistency", n, worst, 1e-6);
}

SuiteResult check_reference_periodicity(long n) {
  double worst = 0.0;
  for (long k = 0; k < n; ++k) {
    const double t = 25.0 * static_cast<double>(k) / static_cast<double>(n);
    const Reference a = reference(t), b = reference(t + kReferencePeriod);
    worst = std::max({worst, (a.p - b.p).lpNorm<Eigen::Infinity>(),
                      (a.v - b.v).lpNorm<Eigen::Infinity>(),
                      std::abs(wrap_angle(a.yaw - b.yaw))});
  }
  return finish("reference_periodicity", n, worst, 1e-12);
}

std::vector<SuiteResult> run_all_suites(std::uint64_t seed, bool quick) {
  const long s = quick ? 10 : 1;
  return {
      check_lse_bound(10000 / s, seed),
      check_lie_derivatives(1000 / s, seed + 1),
      check_gain(10000 / s, seed + 2),
      check_filter_qp_oracle(500 / s, seed + 3, 0.01),
      check_generic_qp_oracle(500 / s, seed + 4, 1e-3),
      check_qp_permutation(500 / s, seed + 5),
      check_qp_monotone(500 / s, seed + 6),
      check_filter_certificate(1000 / s, seed + 7, 1000 / s),
      check_filter_passthrough(500 / s, seed + 8),
      check_filter_idempotence(500 / s, seed + 9),
      check_saturation(10000 / s, seed + 10),
      check_dynamics_consistency(1000 / s, seed + 11),
      check_reference_periodicity(1000 / s),
  };
}

}  // namespace srlf
