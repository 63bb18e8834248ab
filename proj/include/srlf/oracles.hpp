#pragma once

#include <span>
#include <vector>

#include "srlf/barrier.hpp"
#include "srlf/filter.hpp"
#include "srlf/qp.hpp"

namespace srlf::oracle {

/// Accelerated projected gradient ascent on the QP dual
///   max_{lambda >= 0} -1/2 ||q + G^T lambda||^2 - h^T lambda,
/// returning the primal point z = -q - G^T lambda. Shares no code with the
/// active-set solver.
struct DualResult {
  Eigen::VectorXd z;
  Eigen::VectorXd lambda;
  int iterations = 0;
};
DualResult projected_gradient(const QpProblem& prob, int max_iterations = 100000,
                              double tol = 1e-13);

/// Exhaustive search over a grid of spacing `step` in the first n-1
/// coordinates of `lo..hi`; the last coordinate is minimised exactly over
/// the feasible interval the rows leave for it. Returns false when no grid
/// point is feasible.
struct GridResult {
  bool feasible = false;
  Eigen::VectorXd z;
  double objective = 0.0;
  long evaluated = 0;
};
GridResult grid_search(const QpProblem& prob, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, double step);

/// Composed barrier after flowing for `tau` seconds (tau may be negative)
/// under constant acceleration `u`, with obstacles moving at their
/// velocities. Exact for the double integrator.
double barrier_along_flow(const State& s, std::span<const Obstacle> obstacles,
                          const BarrierParams& p, const Vec3& u, double tau);

/// Central difference of barrier_along_flow at tau = 0.
double barrier_rate_fd(const State& s, std::span<const Obstacle> obstacles,
                       const BarrierParams& p, const Vec3& u, double h = 1e-5);

/// A random filtering situation: one to three obstacles scattered around
/// the craft, all outside D_s + `min_gap`.
struct Scenario {
  State state;
  std::vector<Obstacle> obstacles;
  Vec3 u_r = Vec3::Zero();
};
Scenario random_scenario(std::mt19937_64& rng, const BarrierParams& p,
                         double min_gap = 0.02, int max_obstacles = 3);

/// Random QP in `n` variables with `rows` constraints that is feasible by
/// construction (rows are built around a random interior point).
QpProblem random_feasible_qp(std::mt19937_64& rng, int n, int rows);

}  // namespace srlf::oracle
