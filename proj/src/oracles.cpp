#include "srlf/oracles.hpp"

#include <cmath>
#include <limits>

namespace srlf::oracle {

DualResult projected_gradient(const QpProblem& prob, int max_iterations,
                              double tol) {
  const int m = prob.num_rows();
  DualResult r;
  if (m == 0) {
    r.z = -prob.q;
    r.lambda.resize(0);
    return r;
  }
  const Eigen::MatrixXd gram = prob.G * prob.G.transpose();
  const double lipschitz = std::max(
      gram.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / lipschitz;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd y = lambda;
  double t = 1.0;
  for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
    // gradient of the dual objective: -G (q + G^T y) - h = G z(y) - h
    const Eigen::VectorXd z = -prob.q - prob.G.transpose() * y;
    const Eigen::VectorXd grad = prob.G * z - prob.h;
    const Eigen::VectorXd next = (y + step * grad).cwiseMax(0.0);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - lambda);
    const double change = (next - lambda).lpNorm<Eigen::Infinity>();
    lambda = next;
    t = t_next;
    if (change < tol && r.iterations > 10) break;
  }
  r.lambda = lambda;
  r.z = -prob.q - prob.G.transpose() * lambda;
  return r;
}

GridResult grid_search(const QpProblem& prob, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, double step) {
  const int n = prob.num_vars();
  const int m = prob.num_rows();
  GridResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<long> counts(n - 1);
  long total = 1;
  for (int i = 0; i + 1 < n; ++i) {
    counts[i] = static_cast<long>(std::floor((hi[i] - lo[i]) / step + 1e-9)) + 1;
    // Upper endpoint as an extra node when the lattice falls short of it.
    if (lo[i] + step * static_cast<double>(counts[i] - 1) < hi[i] - 1e-12) ++counts[i];
    total *= counts[i];
  }
  Eigen::VectorXd z(n);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int i = 0; i + 1 < n; ++i) {
      z[i] = std::min(hi[i], lo[i] + step * static_cast<double>(rem % counts[i]));
      rem /= counts[i];
    }
    // Feasible interval for the last coordinate.
    double a = lo[n - 1], b = hi[n - 1];
    bool ok = true;
    for (int j = 0; j < m && ok; ++j) {
      const double c = prob.G(j, n - 1);
      const double rest = prob.G.row(j).head(n - 1).dot(z.head(n - 1));
      const double rhs = prob.h[j] - rest;
      if (std::abs(c) < 1e-15) {
        ok = rhs >= -1e-12;
      } else if (c > 0) {
        b = std::min(b, rhs / c);
      } else {
        a = std::max(a, rhs / c);
      }
    }
    ++best.evaluated;
    if (!ok || a > b) continue;
    z[n - 1] = std::clamp(-prob.q[n - 1], a, b);
    const double f = objective(prob, z);
    if (f < best.objective) {
      best.objective = f;
      best.z = z;
      best.feasible = true;
    }
  }
  return best;
}

double barrier_along_flow(const State& s, std::span<const Obstacle> obstacles,
                          const BarrierParams& p, const Vec3& u, double tau) {
  State x = s;
  x.p = s.p + s.v * tau + 0.5 * u * tau * tau;
  x.v = s.v + u * tau;
  std::vector<double> values;
  values.reserve(obstacles.size());
  for (Obstacle o : obstacles) {
    o.center += o.velocity * tau;
    values.push_back(barrier_i(x, o, p));
  }
  return compose(values, p.rho);
}

double barrier_rate_fd(const State& s, std::span<const Obstacle> obstacles,
                       const BarrierParams& p, const Vec3& u, double h) {
  return (barrier_along_flow(s, obstacles, p, u, h) -
          barrier_along_flow(s, obstacles, p, u, -h)) /
         (2.0 * h);
}

Scenario random_scenario(std::mt19937_64& rng, const BarrierParams& p,
                         double min_gap, int max_obstacles) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> count(1, max_obstacles);
  Scenario sc;
  sc.state.p = Vec3(unit(rng), unit(rng), 1.0 + 0.2 * unit(rng));
  sc.state.v = 0.8 * Vec3(unit(rng), unit(rng), 0.3 * unit(rng));
  sc.state.yaw = kPi * unit(rng);
  const int n = count(rng);
  while (static_cast<int>(sc.obstacles.size()) < n) {
    Vec3 dir(unit(rng), unit(rng), 0.3 * unit(rng));
    if (dir.norm() < 1e-3) continue;
    dir.normalize();
    const double dist = p.safety_distance + min_gap + 0.8 * (unit(rng) + 1.0);
    Obstacle o{sc.state.p + dist * dir, 0.1, Vec3::Zero()};
    bool separated = true;
    for (const Obstacle& other : sc.obstacles)
      separated = separated && (other.center - o.center).norm() > 2.0 * p.safety_distance;
    if (separated) sc.obstacles.push_back(o);
  }
  sc.u_r = 3.0 * Vec3(unit(rng), unit(rng), unit(rng));
  return sc;
}

QpProblem random_feasible_qp(std::mt19937_64& rng, int n, int rows) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  QpProblem prob(n);
  Eigen::VectorXd interior(n);
  for (int i = 0; i < n; ++i) {
    prob.q[i] = 2.0 * unit(rng);
    interior[i] = unit(rng);
  }
  for (int j = 0; j < rows; ++j) {
    Eigen::RowVectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = unit(rng);
    if (g.norm() < 1e-2) g[0] = 1.0;
    const double margin = 0.5 * (unit(rng) + 1.0);
    prob.add_row(g, g.dot(interior) + margin);
  }
  return prob;
}

}  // namespace srlf::oracle
