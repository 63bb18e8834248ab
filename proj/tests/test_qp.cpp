#include <algorithm>
#include <numeric>
#include <random>

#include <doctest.h>

#include "srlf/oracles.hpp"
#include "srlf/qp.hpp"

using namespace srlf;
using Eigen::RowVector3d;
using Eigen::Vector3d;

TEST_CASE("unconstrained minimum") {
  QpProblem p;
  QpSolution s = solve(p);
  CHECK(s.status == QpStatus::kOptimal);
  CHECK(s.z.norm() == 0.0);
  p.q = Vector3d(1, -2, 3);
  s = solve(p);
  CHECK(s.z.isApprox(Vector3d(-1, 2, -3)));
  CHECK(s.active_set.empty());
}

TEST_CASE("projection onto a half-space") {
  QpProblem p;
  p.add_row(RowVector3d(-1, 0, 0), -1.0);
  const QpSolution s = solve(p);
  REQUIRE(s.status == QpStatus::kOptimal);
  CHECK(s.z.isApprox(Vector3d(1, 0, 0)));
  REQUIRE(s.multipliers.size() == 1);
  CHECK(s.multipliers[0] == doctest::Approx(1.0));
  CHECK(s.active_set == std::vector<int>{0});
  const KktReport k = kkt_check(p, s);
  CHECK(k.complementarity == 0.0);
  CHECK(k.max() < 1e-12);
}

TEST_CASE("contradictory half-spaces are infeasible with a certificate") {
  QpProblem p;
  p.add_row(RowVector3d(1, 0, 0), -1.0);
  p.add_row(RowVector3d(-1, 0, 0), -1.0);
  const QpSolution s = solve(p);
  CHECK(s.status == QpStatus::kInfeasible);
  REQUIRE_FALSE(s.certificate_rows.empty());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p.num_rows());
  for (std::size_t k = 0; k < s.certificate_rows.size(); ++k)
    y[s.certificate_rows[k]] = s.certificate[static_cast<Eigen::Index>(k)];
  CHECK((y.array() >= 0.0).all());
  CHECK((p.G.transpose() * y).norm() < 1e-12);
  CHECK(p.h.dot(y) < 0.0);
}

TEST_CASE("certificate is sensitive to a perturbation on an active row") {
  QpProblem p;
  p.q = Vector3d(-2, -2, 0);
  p.add_row(RowVector3d(1, 1, 0), 1.0);
  const QpSolution s = solve(p);
  REQUIRE(s.status == QpStatus::kOptimal);
  CHECK(kkt_check(p, s).max() < 1e-8);
  for (int i = 0; i < 3; ++i) {
    for (double sign : {-1.0, 1.0}) {
      Eigen::VectorXd z = s.z;
      z[i] += sign * 1e-3;
      const KktReport k = kkt_check(p, z, s.multipliers);
      CHECK(std::max(k.primal, k.stationarity) > 1e-4);
    }
  }
}

TEST_CASE("two active rows") {
  QpProblem p;
  p.q = Vector3d(-3, -3, -3);
  p.add_row(RowVector3d(1, 0, 0), 1.0);
  p.add_row(RowVector3d(0, 1, 0), 2.0);
  const QpSolution s = solve(p);
  REQUIRE(s.status == QpStatus::kOptimal);
  CHECK(s.z.isApprox(Vector3d(1, 2, 3)));
  CHECK(s.multipliers[0] == doctest::Approx(2.0));
  CHECK(s.multipliers[1] == doctest::Approx(1.0));
}

TEST_CASE("degenerate duplicate rows") {
  QpProblem p;
  p.add_row(RowVector3d(-1, 0, 0), -1.0);
  p.add_row(RowVector3d(-1, 0, 0), -1.0);
  p.add_row(RowVector3d(-2, 0, 0), -2.0);
  const QpSolution s = solve(p);
  REQUIRE(s.status == QpStatus::kOptimal);
  CHECK(s.z.isApprox(Vector3d(1, 0, 0)));
  CHECK(kkt_check(p, s).max() < 1e-8);
}

TEST_CASE("random feasible problems agree with the dual oracle") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 200; ++k) {
    const QpProblem p = oracle::random_feasible_qp(rng, 3, 1 + k % 7);
    const QpSolution s = solve(p);
    REQUIRE(s.status == QpStatus::kOptimal);
    REQUIRE(s.kkt_residual < 1e-8);
    REQUIRE((s.multipliers.array() >= -1e-10).all());
    const oracle::DualResult d = oracle::projected_gradient(p);
    REQUIRE(std::abs(objective(p, s.z) - objective(p, d.z)) < 1e-5);
  }
}

TEST_CASE("row permutation does not change the minimiser") {
  std::mt19937_64 rng(22);
  for (int k = 0; k < 100; ++k) {
    const QpProblem p = oracle::random_feasible_qp(rng, 3, 6);
    std::vector<int> perm(p.num_rows());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    QpProblem r(3);
    r.q = p.q;
    for (int i : perm) r.add_row(p.G.row(i), p.h[i]);
    REQUIRE((solve(p).z - solve(r).z).norm() < 1e-10);
  }
}

TEST_CASE("objective trace never decreases") {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 100; ++k) {
    const QpSolution s = solve(oracle::random_feasible_qp(rng, 3, 7));
    for (std::size_t i = 1; i < s.objective_trace.size(); ++i)
      REQUIRE(s.objective_trace[i] >= s.objective_trace[i - 1] - 1e-12);
  }
}

TEST_CASE("grid oracle finds the projection") {
  QpProblem p;
  p.add_row(RowVector3d(-1, -1, 0), -1.0);
  const oracle::GridResult g = oracle::grid_search(p, Eigen::Vector3d::Constant(-2),
                                                   Eigen::Vector3d::Constant(2), 0.01);
  REQUIRE(g.feasible);
  CHECK(g.objective == doctest::Approx(objective(p, solve(p).z)).epsilon(1e-3));
}

TEST_CASE("grid oracle reaches a feasible sliver at the upper box corner") {
  // Lattice from 0 in steps of 0.01 stops at 1.0; only x, y near 1.005 work.
  QpProblem p;
  p.add_row(RowVector3d(-1, -1, 0), -2.009);
  const Vector3d lo = Vector3d::Zero(), hi(1.005, 1.005, 1.0);
  const oracle::GridResult g = oracle::grid_search(p, lo, hi, 0.01);
  REQUIRE(g.feasible);
  CHECK(g.z[0] == 1.005);
  CHECK(g.z[1] == 1.005);
}

TEST_CASE("malformed problems are rejected") {
  QpProblem p;
  p.add_row(RowVector3d(NAN, 0, 0), 1.0);
  CHECK_THROWS_AS(solve(p), std::invalid_argument);
  QpProblem big;
  for (int i = 0; i <= kMaxQpRows; ++i) big.add_row(RowVector3d(1, 0, 0), 1.0);
  CHECK_THROWS_AS(solve(big), std::invalid_argument);
  QpProblem narrow;
  CHECK_THROWS_AS(narrow.add_row(Eigen::RowVector2d(1, 0), 1.0), std::invalid_argument);
}
