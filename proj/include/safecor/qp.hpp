#pragma once

#include <optional>

#include <Eigen/Dense>

namespace safecor {

/// Dense convex QP:
///   minimize   0.5 x^T H x + g^T x
///   subject to lower <= A x <= upper,  x_lb <= x <= x_ub
/// H must be symmetric positive semidefinite. Rows with lower == upper act as
/// equalities; +/- infinity disables a bound.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;       // may have zero rows
  Eigen::VectorXd lower, upper;
  Eigen::VectorXd x_lb, x_ub;  // empty means unbounded

  int num_vars() const { return static_cast<int>(g.size()); }
  int num_constraints() const { return static_cast<int>(lower.size()); }
};

enum class QpStatus {
  Optimal,
  PrimalInfeasible,   // first-class outcome: certificate of infeasibility found
  MaxIterations,
};

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;   // multipliers for the stacked [A; I] constraints
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct QpSettings {
  double eps_abs = 1e-8;       // ADMM convergence target (pre-polish)
  double eps_rel = 1e-8;
  int max_iterations = 10000;
  double rho = 0.1;            // initial ADMM penalty, adapted during the run
  double sigma = 1e-6;
  double alpha = 1.6;          // over-relaxation
  bool polish = true;          // active-set KKT refinement after convergence
};

/// Warm start for a solver call: previous primal/dual iterates for a problem
/// of identical shape. Ignored when sizes do not match.
struct QpWarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

/// Deterministic dense ADMM solve. Throws std::invalid_argument on shape
/// mismatches or an asymmetric H; infeasibility is reported through status,
/// not an exception.
QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings = {},
                    const QpWarmStart* warm = nullptr);

/// KKT residuals of a candidate point: .first is the max primal constraint
/// violation, .second the stationarity residual (infinity norm) under the
/// best sign-feasible multipliers for the active set. Both are <= 1e-9 iff
/// x is an exact KKT point (up to that tolerance).
std::pair<double, double> kkt_residual(const QpProblem& problem, const Eigen::VectorXd& x);

}  // namespace safecor
