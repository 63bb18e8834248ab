#pragma once

#include <optional>
#include <span>

#include "srlf/barrier.hpp"
#include "srlf/dynamics.hpp"
#include "srlf/qp.hpp"

namespace srlf {

/// kExact: nominal barrier derivative of the full command u_r + u_f + gain
/// must exceed -gamma b^3 plus a robustness margin that covers every
/// disturbance with |mu|_inf <= d_bar (see robustness_margin).
/// kPaperLiteral: the aggregated row -e~^T u_f <= e^ + gamma b^3 + e~^T u_r
/// with e^ and e~ unnormalised, exactly as printed.
enum class ConstraintForm { kExact, kPaperLiteral };

const char* to_string(ConstraintForm f);
ConstraintForm constraint_form_from_string(const std::string& s);

struct FilterConfig {
  BarrierParams barrier;
  SaturationLimits limits = SaturationLimits::inscribed();
  ConstraintForm form = ConstraintForm::kExact;
  double slack_weight = 1e6;
  bool enabled = true;
  QpSettings qp;

  void validate() const;
};

enum class FilterStatus { kOptimal, kRelaxed, kDegraded, kDisabled };

const char* to_string(FilterStatus s);

struct FilterOutcome {
  ControlCommand u_r;
  Vec3 u_f = Vec3::Zero();
  Vec3 u_s = Vec3::Zero();
  Vec3 gain = Vec3::Zero();
  ControlCommand u_final;
  /// Composed and smallest individual barrier at the filtered state;
  /// +inf without obstacles.
  double b = 0.0;
  double b_min = 0.0;
  FilterStatus status = FilterStatus::kOptimal;
  QpStatus qp_status = QpStatus::kOptimal;
  double slack = 0.0;
  bool barrier_active = false;
  bool near_singular = false;
  int qp_iterations = 0;
  std::optional<BarrierEval> eval;
};

/// Extra nominal decrease-rate headroom d_bar |L_g b|_1 - d_bar^2 / 4
/// (floored at zero). With it, b' >= -gamma b^3 - d_bar^2 / 4 holds for
/// every disturbance in the infinity-norm ball, not only the nominal one.
double robustness_margin(const BarrierEval& e, const BarrierParams& p);

/// L_f b + L_g b u: barrier derivative under total acceleration u.
double barrier_rate(const BarrierEval& e, const Vec3& u);

/// Builds the QP over z = u_f: box rows keep u_r + z + gain inside the
/// saturation box, and one barrier row per `cfg.form` (omitted when `e`
/// is empty).
QpProblem assemble(const BarrierEval* e, const Vec3& u_r,
                   const FilterConfig& cfg);
QpProblem assemble(const State& s, std::span<const Obstacle> obstacles,
                   const Vec3& u_r, const FilterConfig& cfg);

/// Minimal-norm safe correction. Falls back to a penalised slack on the
/// barrier row when the hard problem is infeasible.
FilterOutcome filter(const State& s, std::span<const Obstacle> obstacles,
                     const ControlCommand& u_r, const FilterConfig& cfg);

}  // namespace srlf
