#pragma once

#include <vector>

#include <Eigen/Dense>

namespace srlf {

/// Dense strictly convex QP with identity Hessian:
///   min 1/2 ||z||^2 + q^T z   s.t.   G z <= h.
enum class RowLabel { kBoxLower, kBoxUpper, kBarrier, kSlack, kGeneric };

const char* to_string(RowLabel l);

inline constexpr int kMaxQpRows = 16;

struct QpProblem {
  Eigen::VectorXd q;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  std::vector<RowLabel> labels;

  explicit QpProblem(int n = 3) : q(Eigen::VectorXd::Zero(n)), G(0, n), h(0) {}

  int num_vars() const { return static_cast<int>(q.size()); }
  int num_rows() const { return static_cast<int>(G.rows()); }
  void add_row(const Eigen::Ref<const Eigen::RowVectorXd>& g, double rhs,
               RowLabel label = RowLabel::kGeneric);
  void validate() const;
};

enum class QpStatus { kOptimal, kInfeasible, kDegraded };

const char* to_string(QpStatus s);

struct QpSettings {
  double feasibility_tol = 1e-9;
  double multiplier_tol = -1e-10;
  double kkt_tol = 1e-8;
  int max_iterations = 64;
};

struct QpSolution {
  Eigen::VectorXd z;
  std::vector<int> active_set;
  /// One multiplier per row of G; zero for inactive rows.
  Eigen::VectorXd multipliers;
  QpStatus status = QpStatus::kDegraded;
  double kkt_residual = 0.0;
  int iterations = 0;
  /// Objective after every primal move. The method is dual: it starts at
  /// the unconstrained minimiser, so this sequence never decreases.
  std::vector<double> objective_trace;
  /// For infeasible problems: y >= 0 over `certificate_rows` with
  /// G^T y = 0 and h^T y < 0.
  std::vector<int> certificate_rows;
  Eigen::VectorXd certificate;
};

/// Goldfarb-Idnani style dual active-set iteration. Starts at z = -q, adds
/// the most violated row (lowest index on ties) and takes full or partial
/// steps, dropping rows whose multiplier reaches zero.
QpSolution solve(const QpProblem& prob, const QpSettings& settings = {});

struct KktReport {
  double stationarity = 0.0;     // ||z + q + G^T lambda||_inf
  double primal = 0.0;           // max(0, max(G z - h))
  double dual = 0.0;             // max(0, -min lambda)
  double complementarity = 0.0;  // max |lambda_j (G_j z - h_j)|

  double max() const;
};

KktReport kkt_check(const QpProblem& prob, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& multipliers);
inline KktReport kkt_check(const QpProblem& prob, const QpSolution& sol) {
  return kkt_check(prob, sol.z, sol.multipliers);
}

double objective(const QpProblem& prob, const Eigen::VectorXd& z);

}  // namespace srlf
