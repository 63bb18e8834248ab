#include "srlf/filter.hpp"

#include <cmath>
#include <limits>

namespace srlf {

const char* to_string(ConstraintForm f) {
  return f == ConstraintForm::kExact ? "exact" : "paper-literal";
}

ConstraintForm constraint_form_from_string(const std::string& s) {
  if (s == "exact") return ConstraintForm::kExact;
  if (s == "paper-literal" || s == "paper_literal")
    return ConstraintForm::kPaperLiteral;
  throw InvalidInput("unknown constraint form '" + s + "'");
}

const char* to_string(FilterStatus s) {
  switch (s) {
    case FilterStatus::kOptimal: return "optimal";
    case FilterStatus::kRelaxed: return "relaxed";
    case FilterStatus::kDegraded: return "degraded";
    case FilterStatus::kDisabled: return "disabled";
  }
  return "?";
}

void FilterConfig::validate() const {
  barrier.validate();
  limits.validate();
  if (!(slack_weight >= 1e3))
    throw InvalidInput("filter: slack_weight must be >= 1e3");
}

double robustness_margin(const BarrierEval& e, const BarrierParams& p) {
  return std::max(0.0, p.d_bar * e.lg_b.lpNorm<1>() - 0.25 * p.d_bar * p.d_bar);
}

double barrier_rate(const BarrierEval& e, const Vec3& u) {
  return e.lf_b + e.lg_b.dot(u);
}

namespace {

void add_box_rows(QpProblem& prob, const Vec3& shift,
                  const SaturationLimits& lim) {
  const int n = prob.num_vars();
  for (int i = 0; i < 3; ++i) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
    row[i] = 1.0;
    prob.add_row(row, lim.u_max[i] - shift[i], RowLabel::kBoxUpper);
    prob.add_row(-row, -(lim.u_min[i] - shift[i]), RowLabel::kBoxLower);
  }
}

/// Barrier row as (normal over z, rhs).
std::pair<Vec3, double> barrier_row(const BarrierEval& e, const Vec3& u_r,
                                    const FilterConfig& cfg) {
  const double decay = cfg.barrier.alpha(e.b);
  if (cfg.form == ConstraintForm::kExact) {
    return {-e.lg_b, barrier_rate(e, u_r + e.gain) + decay -
                         robustness_margin(e, cfg.barrier)};
  }
  Vec3 e_tilde_sum = Vec3::Zero();
  for (const Vec3& row : e.e_tilde) e_tilde_sum += row;
  return {-e_tilde_sum, e.e_hat + decay + e_tilde_sum.dot(u_r)};
}

}  // namespace

QpProblem assemble(const BarrierEval* e, const Vec3& u_r,
                   const FilterConfig& cfg) {
  QpProblem prob(3);
  const Vec3 gain = e ? e->gain : Vec3::Zero();
  add_box_rows(prob, u_r + gain, cfg.limits);
  if (e) {
    const auto [normal, rhs] = barrier_row(*e, u_r, cfg);
    prob.add_row(normal.transpose(), rhs, RowLabel::kBarrier);
  }
  return prob;
}

QpProblem assemble(const State& s, std::span<const Obstacle> obstacles,
                   const Vec3& u_r, const FilterConfig& cfg) {
  if (obstacles.empty()) return assemble(nullptr, u_r, cfg);
  const BarrierEval e = lie_terms(s, obstacles, cfg.barrier);
  return assemble(&e, u_r, cfg);
}

namespace {

/// Same rows with a scaled slack variable sigma appended to the barrier
/// row. With s = sigma / sqrt(2 w), 1/2 sigma^2 equals w s^2.
QpProblem relax(const QpProblem& hard, double slack_weight) {
  QpProblem soft(hard.num_vars() + 1);
  const double scale = 1.0 / std::sqrt(2.0 * slack_weight);
  for (int j = 0; j < hard.num_rows(); ++j) {
    Eigen::RowVectorXd row(soft.num_vars());
    row << hard.G.row(j), 0.0;
    if (hard.labels[j] == RowLabel::kBarrier) row[hard.num_vars()] = -scale;
    soft.add_row(row, hard.h[j], hard.labels[j]);
  }
  Eigen::RowVectorXd nonneg = Eigen::RowVectorXd::Zero(soft.num_vars());
  nonneg[hard.num_vars()] = -1.0;
  soft.add_row(nonneg, 0.0, RowLabel::kSlack);
  return soft;
}

bool barrier_in_active_set(const QpProblem& prob, const QpSolution& sol) {
  for (int j : sol.active_set)
    if (prob.labels[j] == RowLabel::kBarrier) return true;
  return false;
}

}  // namespace

FilterOutcome filter(const State& s, std::span<const Obstacle> obstacles,
                     const ControlCommand& u_r, const FilterConfig& cfg) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  FilterOutcome out;
  out.u_r = u_r;
  out.b = kInf;
  out.b_min = kInf;
  out.u_final.yaw_rate =
      std::clamp(u_r.yaw_rate, -cfg.limits.w_max, cfg.limits.w_max);

  if (!obstacles.empty()) {
    try {
      out.eval = lie_terms(s, obstacles, cfg.barrier);
      out.b = out.eval->b;
      out.b_min = out.eval->min_b_i();
      out.near_singular = out.eval->near_singular;
    } catch (const DegenerateGeometry&) {
      out.status = cfg.enabled ? FilterStatus::kDegraded : FilterStatus::kDisabled;
      out.qp_status = QpStatus::kDegraded;
      out.b = out.b_min = -kInf;
      out.u_s = u_r.accel;
      out.u_final = saturate(u_r, cfg.limits);
      return out;
    }
  }

  if (!cfg.enabled) {
    out.status = FilterStatus::kDisabled;
    out.u_s = u_r.accel;
    out.u_final = saturate(u_r, cfg.limits);
    return out;
  }

  const BarrierEval* e = out.eval ? &*out.eval : nullptr;
  out.gain = e ? e->gain : Vec3::Zero();
  const QpProblem hard = assemble(e, u_r.accel, cfg);
  QpSolution sol = solve(hard, cfg.qp);
  out.qp_iterations = sol.iterations;

  if (sol.status == QpStatus::kInfeasible) {
    const QpProblem soft = relax(hard, cfg.slack_weight);
    QpSolution relaxed = solve(soft, cfg.qp);
    // The slack multiplier grows like sqrt(slack_weight) times the slack, so
    // the certificate is judged relative to the multiplier scale here.
    if (relaxed.status == QpStatus::kDegraded && relaxed.z.allFinite()) {
      const KktReport k = kkt_check(soft, relaxed);
      const double lam = std::max(1.0, relaxed.multipliers.lpNorm<Eigen::Infinity>());
      const double mag = std::max(1.0, relaxed.z.lpNorm<Eigen::Infinity>());
      const double rel = std::max({k.stationarity / lam, k.primal / mag, k.dual / lam,
                                   k.complementarity / (lam * mag)});
      if (rel < cfg.qp.kkt_tol) relaxed.status = QpStatus::kOptimal;
    }
    out.qp_iterations += relaxed.iterations;
    out.qp_status = relaxed.status;
    out.u_f = relaxed.z.head<3>();
    out.slack = std::max(0.0, relaxed.z[3]) / std::sqrt(2.0 * cfg.slack_weight);
    out.barrier_active = barrier_in_active_set(soft, relaxed);
    out.status = relaxed.status == QpStatus::kOptimal ? FilterStatus::kRelaxed
                                                      : FilterStatus::kDegraded;
  } else {
    out.qp_status = sol.status;
    out.u_f = sol.z;
    out.barrier_active = barrier_in_active_set(hard, sol);
    out.status = sol.status == QpStatus::kOptimal ? FilterStatus::kOptimal
                                                  : FilterStatus::kDegraded;
  }

  out.u_s = u_r.accel + out.u_f;
  // The solver accepts rows violated by up to 1e-9; the final saturation
  // removes that residue so the box holds exactly.
  ControlCommand total{out.u_s + out.gain, u_r.yaw_rate};
  out.u_final = saturate(total, cfg.limits);
  return out;
}

}  // namespace srlf
