#include <cmath>
#include <random>

#include <doctest.h>

#include "srlf/filter.hpp"
#include "srlf/oracles.hpp"

using namespace srlf;

namespace {
State at(Vec3 p, Vec3 v = Vec3::Zero()) { return State{p, v, 0.0, 0.0}; }
}  // namespace

TEST_CASE("far from obstacles the correction is zero") {
  const FilterConfig cfg;
  const Obstacle obs[] = {{Vec3(20, 0, 1), 0.1, Vec3::Zero()}};
  const ControlCommand u_r{Vec3(0.5, -0.2, 0.1), 0.3};
  const FilterOutcome out = filter(at(Vec3(0, 0, 1)), obs, u_r, cfg);
  CHECK(out.status == FilterStatus::kOptimal);
  CHECK(out.u_f.norm() < 1e-12);
  CHECK_FALSE(out.barrier_active);
  CHECK(out.slack == 0.0);
  CHECK((out.u_final.accel - (u_r.accel + out.gain)).norm() < 1e-12);
  CHECK(out.u_final.yaw_rate == 0.3);
}

TEST_CASE("without obstacles only the box acts") {
  const FilterConfig cfg;
  const FilterOutcome out = filter(at(Vec3(0, 0, 1)), {}, {Vec3(9, 0, 0), 0.0}, cfg);
  CHECK(out.status == FilterStatus::kOptimal);
  CHECK(std::isinf(out.b_min));
  CHECK(out.gain.norm() == 0.0);
  CHECK(out.u_final.accel.x() == doctest::Approx(cfg.limits.u_max.x()));
}

TEST_CASE("zero reference and zero gain reduce the box rows to the limits") {
  const FilterConfig cfg;
  const QpProblem p = assemble(nullptr, Vec3::Zero(), cfg);
  REQUIRE(p.num_rows() == 6);
  for (int i = 0; i < 6; ++i) CHECK(std::abs(p.h[i]) == doctest::Approx(5.0 / std::sqrt(3.0)));
}

TEST_CASE("head-on approach brakes, matching the grid oracle") {
  FilterConfig cfg;
  cfg.limits = SaturationLimits::literal_box(10.0);
  const Obstacle obs[] = {{Vec3(1, 0, 1), 0.1, Vec3::Zero()}};
  const State s = at(Vec3(0.7, 0, 1), Vec3(1, 0, 0));
  const Vec3 u_r(2, 0, 0);
  const FilterOutcome out = filter(s, obs, {u_r, 0.0}, cfg);
  REQUIRE(out.status == FilterStatus::kOptimal);
  CHECK(out.barrier_active);
  CHECK(out.u_f.x() < 0.0);

  // Barrier row normal is along the approach direction: corrections that
  // brake are the ones it admits.
  const QpProblem p = assemble(s, obs, u_r, cfg);
  const Eigen::RowVectorXd row = p.G.row(p.num_rows() - 1);
  CHECK(row[0] > 0.0);
  CHECK(std::abs(row[1]) < 1e-12);
  CHECK(std::abs(row[2]) < 1e-12);

  // The box is already limited by the literal +-10 box inside [-10,10]^3.
  const oracle::GridResult g = oracle::grid_search(p, Eigen::Vector3d::Constant(-10),
                                                   Eigen::Vector3d::Constant(10), 0.01);
  REQUIRE(g.feasible);
  const double ours = objective(p, out.u_f);
  const double res = 10 * 0.01 * (out.u_f.norm() + 1) + 0.01 * 0.01;
  CHECK(ours <= g.objective + 1e-9);
  CHECK(g.objective - ours <= res);
}

TEST_CASE("constructed infeasibility falls back to a positive slack") {
  // Closing at 6 m/s just outside the shell: the required deceleration is
  // far beyond the box.
  const FilterConfig cfg;
  const Obstacle obs[] = {{Vec3(1, 0, 1), 0.1, Vec3::Zero()}};
  const State s = at(Vec3(0.8, 0, 1), Vec3(6, 0, 0));
  const QpProblem hard = assemble(s, obs, Vec3::Zero(), cfg);
  CHECK(solve(hard).status == QpStatus::kInfeasible);
  const FilterOutcome out = filter(s, obs, {Vec3::Zero(), 0.0}, cfg);
  CHECK(out.status == FilterStatus::kRelaxed);
  CHECK(out.slack > 0.0);
  CHECK(out.u_final.accel.norm() <= cfg.limits.u_norm_max);
  // Best effort: full braking along the approach axis.
  CHECK(out.u_final.accel.x() < -2.8);
}

TEST_CASE("disabled filter passes the saturated command through") {
  FilterConfig cfg;
  cfg.enabled = false;
  const Obstacle obs[] = {{Vec3(1, 0, 1), 0.1, Vec3::Zero()}};
  const ControlCommand u_r{Vec3(8, 0, 0), 3.0};
  const FilterOutcome out = filter(at(Vec3(0.8, 0, 1), Vec3(3, 0, 0)), obs, u_r, cfg);
  const ControlCommand sat = saturate(u_r, cfg.limits);
  CHECK(out.status == FilterStatus::kDisabled);
  CHECK(out.u_final.accel == sat.accel);
  CHECK(out.u_final.yaw_rate == sat.yaw_rate);
  CHECK(out.u_f == Vec3::Zero());
  CHECK(out.gain == Vec3::Zero());
}

TEST_CASE("certificate holds for nominal and bounded disturbances") {
  std::mt19937_64 rng(31);
  const FilterConfig cfg;
  std::uniform_real_distribution<double> mu(-1, 1);
  int checked = 0;
  for (int k = 0; k < 300; ++k) {
    const oracle::Scenario sc = oracle::random_scenario(rng, cfg.barrier);
    const FilterOutcome out = filter(sc.state, sc.obstacles, {sc.u_r, 0.0}, cfg);
    if (out.status != FilterStatus::kOptimal) continue;
    ++checked;
    const BarrierEval& e = *out.eval;
    const double floor = -cfg.barrier.alpha(e.b);
    REQUIRE(barrier_rate(e, out.u_final.accel) >= floor - 1e-9);
    for (int j = 0; j < 50; ++j) {
      const Vec3 m(mu(rng), mu(rng), mu(rng));
      REQUIRE(barrier_rate(e, out.u_final.accel + m) >= floor - 0.25 - 1e-9);
    }
  }
  CHECK(checked > 250);
}

TEST_CASE("plain nominal row cannot cover every disturbance") {
  // With L_g b = [-1,0,0] and mu = [1,0,0] the disturbance costs a full
  // unit of rate, more than d_bar^2/4 allows.
  const Obstacle obs[] = {{Vec3(1, 0, 1), 0.1, Vec3::Zero()}};
  const BarrierEval e = lie_terms(at(Vec3(0, 0, 1)), obs, BarrierParams{});
  CHECK(robustness_margin(e, BarrierParams{}) == doctest::Approx(0.75));
}

TEST_CASE("filtering a filtered command is a no-op") {
  std::mt19937_64 rng(32);
  const FilterConfig cfg;
  for (int k = 0; k < 200; ++k) {
    const oracle::Scenario sc = oracle::random_scenario(rng, cfg.barrier);
    const FilterOutcome a = filter(sc.state, sc.obstacles, {sc.u_r, 0.0}, cfg);
    if (a.status != FilterStatus::kOptimal) continue;
    const FilterOutcome b = filter(sc.state, sc.obstacles, {a.u_s, 0.0}, cfg);
    REQUIRE(b.u_f.norm() < 1e-8);
  }
}

TEST_CASE("paper-literal form assembles the printed row") {
  FilterConfig cfg;
  cfg.form = ConstraintForm::kPaperLiteral;
  const Obstacle obs[] = {{Vec3(1, 0, 1), 0.1, Vec3::Zero()}};
  const State s = at(Vec3(0, 0, 1), Vec3(0.5, 0, 0));
  const BarrierEval e = lie_terms(s, obs, cfg.barrier);
  const Vec3 u_r(0.3, 0.1, 0);
  const QpProblem p = assemble(&e, u_r, cfg);
  Vec3 sum = Vec3::Zero();
  for (const Vec3& t : e.e_tilde) sum += t;
  const Eigen::RowVectorXd row = p.G.row(p.num_rows() - 1);
  CHECK((row.transpose() + sum).norm() < 1e-14);
  CHECK(p.h[p.num_rows() - 1] ==
        doctest::Approx(e.e_hat + cfg.barrier.alpha(e.b) + sum.dot(u_r)));
  const FilterOutcome out = filter(s, obs, {u_r, 0.0}, cfg);
  CHECK(out.status == FilterStatus::kOptimal);
}

TEST_CASE("degenerate geometry is flagged, not hidden") {
  const FilterConfig cfg;
  const Obstacle obs[] = {{Vec3(1, 0, 1), 0.1, Vec3::Zero()}};
  const FilterOutcome out = filter(at(Vec3(1, 0, 1)), obs, {Vec3(1, 0, 0), 0.0}, cfg);
  CHECK(out.status == FilterStatus::kDegraded);
  CHECK(out.u_final.accel.norm() <= cfg.limits.u_norm_max);
}

TEST_CASE("config validation") {
  FilterConfig cfg;
  cfg.slack_weight = 10.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  CHECK(constraint_form_from_string("paper-literal") == ConstraintForm::kPaperLiteral);
  CHECK(constraint_form_from_string("exact") == ConstraintForm::kExact);
  CHECK_THROWS_AS(constraint_form_from_string("bogus"), InvalidInput);
}
