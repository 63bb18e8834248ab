#include "srlf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srlf/types.hpp"

namespace srlf {

const char* to_string(RowLabel l) {
  switch (l) {
    case RowLabel::kBoxLower: return "box-lower";
    case RowLabel::kBoxUpper: return "box-upper";
    case RowLabel::kBarrier: return "barrier";
    case RowLabel::kSlack: return "slack";
    case RowLabel::kGeneric: return "generic";
  }
  return "?";
}

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kDegraded: return "degraded";
  }
  return "?";
}

void QpProblem::add_row(const Eigen::Ref<const Eigen::RowVectorXd>& g,
                        double rhs, RowLabel label) {
  if (g.size() != num_vars())
    throw InvalidInput("qp: constraint row has wrong width");
  const Eigen::Index r = G.rows();
  G.conservativeResize(r + 1, Eigen::NoChange);
  h.conservativeResize(r + 1);
  G.row(r) = g;
  h[r] = rhs;
  labels.push_back(label);
}

void QpProblem::validate() const {
  if (num_vars() == 0) throw InvalidInput("qp: no variables");
  if (G.cols() != num_vars() || G.rows() != h.size() ||
      static_cast<Eigen::Index>(labels.size()) != G.rows())
    throw InvalidInput("qp: inconsistent dimensions");
  if (G.rows() > kMaxQpRows) throw InvalidInput("qp: too many constraint rows");
  if (!q.allFinite() || !G.allFinite() || !h.allFinite())
    throw InvalidInput("qp: non-finite problem data");
}

double objective(const QpProblem& prob, const Eigen::VectorXd& z) {
  return 0.5 * z.squaredNorm() + prob.q.dot(z);
}

double KktReport::max() const {
  return std::max({stationarity, primal, dual, complementarity});
}

KktReport kkt_check(const QpProblem& prob, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& lambda) {
  KktReport r;
  Eigen::VectorXd grad = z + prob.q;
  if (prob.num_rows() > 0) grad += prob.G.transpose() * lambda;
  r.stationarity = grad.cwiseAbs().maxCoeff();
  if (prob.num_rows() == 0) return r;
  const Eigen::VectorXd resid = prob.G * z - prob.h;
  r.primal = std::max(0.0, resid.maxCoeff());
  r.dual = std::max(0.0, -lambda.minCoeff());
  r.complementarity = lambda.cwiseProduct(resid).cwiseAbs().maxCoeff();
  return r;
}

QpSolution solve(const QpProblem& prob, const QpSettings& settings) {
  prob.validate();
  const int n = prob.num_vars();
  const int m = prob.num_rows();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  QpSolution sol;
  sol.z = -prob.q;
  sol.multipliers = Eigen::VectorXd::Zero(m);
  sol.objective_trace.push_back(objective(prob, sol.z));

  std::vector<int> active;
  std::vector<double> lambda;

  auto finish = [&](QpStatus status) {
    sol.active_set = active;
    sol.multipliers.setZero();
    for (std::size_t k = 0; k < active.size(); ++k)
      sol.multipliers[active[k]] = lambda[k];
    if (status == QpStatus::kOptimal) {
      sol.kkt_residual = kkt_check(prob, sol).max();
      if (!(sol.kkt_residual < settings.kkt_tol)) status = QpStatus::kDegraded;
    }
    sol.status = status;
    return sol;
  };

  while (true) {
    // Most violated row; strict comparison keeps the lowest index on ties.
    int p = -1;
    double worst = settings.feasibility_tol;
    for (int j = 0; j < m; ++j) {
      if (std::find(active.begin(), active.end(), j) != active.end()) continue;
      const double s = prob.G.row(j).dot(sol.z) - prob.h[j];
      if (s > worst) {
        worst = s;
        p = j;
      }
    }
    if (p < 0) return finish(QpStatus::kOptimal);

    const Eigen::VectorXd np = prob.G.row(p).transpose();
    double lambda_p = 0.0;
    while (true) {
      if (++sol.iterations > settings.max_iterations)
        return finish(QpStatus::kDegraded);

      const int k = static_cast<int>(active.size());
      Eigen::VectorXd r(k);
      Eigen::VectorXd proj = np;
      if (k > 0) {
        Eigen::MatrixXd N(k, n);
        for (int i = 0; i < k; ++i) N.row(i) = prob.G.row(active[i]);
        const Eigen::MatrixXd gram = N * N.transpose();
        r = gram.ldlt().solve(N * np);
        proj -= N.transpose() * r;
      }

      const double slack = np.dot(sol.z) - prob.h[p];
      const double curvature = proj.squaredNorm();
      const double t_full =
          curvature > 1e-14 * np.squaredNorm() ? slack / curvature : kInf;

      double t_partial = kInf;
      int drop = -1;
      for (int i = 0; i < k; ++i) {
        if (r[i] > 0.0) {
          const double t = lambda[i] / r[i];
          if (t < t_partial) {
            t_partial = t;
            drop = i;
          }
        }
      }

      if (t_full == kInf && t_partial == kInf) {
        // np = N^T r with r <= 0: a non-negative combination of the rows
        // cancels while the offsets sum to -slack < 0.
        sol.certificate_rows = active;
        sol.certificate_rows.push_back(p);
        sol.certificate.resize(k + 1);
        for (int i = 0; i < k; ++i) sol.certificate[i] = std::max(0.0, -r[i]);
        sol.certificate[k] = 1.0;
        return finish(QpStatus::kInfeasible);
      }

      const double t = std::min(t_full, t_partial);
      if (t_full != kInf) {
        sol.z -= t * proj;
        sol.objective_trace.push_back(objective(prob, sol.z));
      }
      for (int i = 0; i < k; ++i) lambda[i] -= t * r[i];
      lambda_p += t;

      if (t_full <= t_partial) {
        active.push_back(p);
        lambda.push_back(lambda_p);
        break;
      }
      active.erase(active.begin() + drop);
      lambda.erase(lambda.begin() + drop);
    }
  }
}

}  // namespace srlf
