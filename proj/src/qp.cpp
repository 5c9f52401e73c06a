#include "safecor/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace safecor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_problem(const QpProblem& p) {
  const int v = p.num_vars();
  const int c = p.num_constraints();
  if (p.H.rows() != v || p.H.cols() != v) {
    throw std::invalid_argument("solve_qp: H must be " + std::to_string(v) + "x" +
                                std::to_string(v));
  }
  if (p.A.size() > 0 && (p.A.rows() != c || p.A.cols() != v)) {
    throw std::invalid_argument("solve_qp: A shape mismatch");
  }
  if (p.upper.size() != c) throw std::invalid_argument("solve_qp: lower/upper size mismatch");
  if (p.x_lb.size() != 0 && p.x_lb.size() != v) {
    throw std::invalid_argument("solve_qp: x_lb size mismatch");
  }
  if (p.x_ub.size() != 0 && p.x_ub.size() != v) {
    throw std::invalid_argument("solve_qp: x_ub size mismatch");
  }
  const double scale = std::max(1.0, p.H.cwiseAbs().maxCoeff());
  if ((p.H - p.H.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw std::invalid_argument("solve_qp: H is not symmetric");
  }
  for (int i = 0; i < c; ++i) {
    if (p.lower[i] > p.upper[i]) {
      throw std::invalid_argument("solve_qp: lower[" + std::to_string(i) + "] > upper[" +
                                  std::to_string(i) + "]");
    }
  }
}

struct Stacked {
  Eigen::MatrixXd M;      // [A; I]
  Eigen::VectorXd L, U;   // stacked bounds
};

Stacked stack_constraints(const QpProblem& p) {
  const int v = p.num_vars();
  const int c = p.num_constraints();
  Stacked s;
  s.M.resize(c + v, v);
  if (c > 0) s.M.topRows(c) = p.A;
  s.M.bottomRows(v) = Eigen::MatrixXd::Identity(v, v);
  s.L.resize(c + v);
  s.U.resize(c + v);
  if (c > 0) {
    s.L.head(c) = p.lower;
    s.U.head(c) = p.upper;
  }
  s.L.tail(v) = p.x_lb.size() ? p.x_lb : Eigen::VectorXd::Constant(v, -kInf);
  s.U.tail(v) = p.x_ub.size() ? p.x_ub : Eigen::VectorXd::Constant(v, kInf);
  return s;
}

/// Active-set KKT refinement of a converged ADMM iterate. The working set is
/// seeded from the ADMM multiplier signs, then iterated: a pinned row whose
/// exact multiplier comes out with the wrong sign leaves the set, the most
/// violated free row joins it. Each pass solves the face-restricted KKT
/// system exactly, so on acceptance the point is optimal to solve precision,
/// not just ADMM precision. Finite (the set cannot repeat under strictly
/// convex H plus the pass cap); returns false to keep the ADMM iterate.
bool polish(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Stacked& s,
            QpSolution& sol) {
  const int v = static_cast<int>(g.size());
  const int mc = static_cast<int>(s.L.size());
  const double tol = 1e-9 * (1.0 + g.cwiseAbs().maxCoeff());

  // side: -1 pinned to lower, +1 pinned to upper, 0 free. Equality rows are
  // permanently pinned; their multiplier sign is unconstrained.
  std::vector<int> side(mc, 0);
  for (int i = 0; i < mc; ++i) {
    if (s.L[i] == s.U[i]) {
      side[i] = 1;
    } else if (sol.y[i] < 0.0 && s.L[i] > -kInf) {
      side[i] = -1;
    } else if (sol.y[i] > 0.0 && s.U[i] < kInf) {
      side[i] = 1;
    }
  }

  constexpr double delta = 1e-9;
  for (int pass = 0; pass < 3 * mc + 10; ++pass) {
    std::vector<int> active;
    for (int i = 0; i < mc; ++i) {
      if (side[i] != 0) active.push_back(i);
    }
    const int na = static_cast<int>(active.size());
    Eigen::MatrixXd Ma(na, v);
    Eigen::VectorXd b(na);
    for (int k = 0; k < na; ++k) {
      Ma.row(k) = s.M.row(active[k]);
      b[k] = side[active[k]] > 0 ? s.U[active[k]] : s.L[active[k]];
    }

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(v + na, v + na);
    K.topLeftCorner(v, v) = H + delta * Eigen::MatrixXd::Identity(v, v);
    if (na > 0) {
      K.topRightCorner(v, na) = Ma.transpose();
      K.bottomLeftCorner(na, v) = Ma;
      K.bottomRightCorner(na, na) = -delta * Eigen::MatrixXd::Identity(na, na);
    }
    Eigen::VectorXd rhs(v + na);
    rhs.head(v) = -g;
    rhs.tail(na) = b;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
    Eigen::VectorXd t = lu.solve(rhs);
    // iterative refinement against the unregularized KKT system
    Eigen::MatrixXd K0 = K;
    K0.topLeftCorner(v, v) -= delta * Eigen::MatrixXd::Identity(v, v);
    if (na > 0) K0.bottomRightCorner(na, na).setZero();
    for (int it = 0; it < 3; ++it) {
      t += lu.solve(rhs - K0 * t);
    }
    if (!t.allFinite()) return false;

    // Dual feasibility of the working set: pinned-to-upper rows need a
    // non-negative multiplier, pinned-to-lower a non-positive one.
    int drop = -1;
    double worst_sign = tol;
    for (int k = 0; k < na; ++k) {
      const int i = active[k];
      if (s.L[i] == s.U[i]) continue;
      const double viol = side[i] > 0 ? -t[v + k] : t[v + k];
      if (viol > worst_sign) {
        worst_sign = viol;
        drop = i;
      }
    }
    if (drop >= 0) {
      side[drop] = 0;
      continue;
    }

    // Primal feasibility of the free rows: the most violated one joins.
    const Eigen::VectorXd mx = s.M * t.head(v);
    int add = -1, add_side = 0;
    double worst_prim = tol;
    for (int i = 0; i < mc; ++i) {
      if (side[i] != 0) continue;
      if (s.L[i] > -kInf && s.L[i] - mx[i] > worst_prim) {
        worst_prim = s.L[i] - mx[i];
        add = i;
        add_side = -1;
      }
      if (s.U[i] < kInf && mx[i] - s.U[i] > worst_prim) {
        worst_prim = mx[i] - s.U[i];
        add = i;
        add_side = 1;
      }
    }
    if (add >= 0) {
      side[add] = add_side;
      continue;
    }

    // Feasible with sign-correct multipliers: an exact KKT point.
    sol.x = t.head(v);
    sol.y = Eigen::VectorXd::Zero(mc);
    for (int k = 0; k < na; ++k) sol.y[active[k]] = t[v + k];
    double r_prim = 0.0;
    for (int i = 0; i < mc; ++i) {
      if (s.L[i] > -kInf) r_prim = std::max(r_prim, s.L[i] - mx[i]);
      if (s.U[i] < kInf) r_prim = std::max(r_prim, mx[i] - s.U[i]);
    }
    sol.primal_residual = std::max(r_prim, 0.0);
    sol.dual_residual =
        (H * sol.x + g + s.M.transpose() * sol.y).cwiseAbs().maxCoeff();
    return true;
  }
  return false;
}

}  // namespace

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings, const QpWarmStart* warm) {
  validate_problem(problem);
  const int v = problem.num_vars();

  Eigen::MatrixXd H = 0.5 * (problem.H + problem.H.transpose());
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < 0.0) {
      H += 1e-9 * Eigen::MatrixXd::Identity(v, v);
    }
  }
  const Eigen::VectorXd& g = problem.g;
  const Stacked s = stack_constraints(problem);
  const int mc = static_cast<int>(s.L.size());

  // Equality rows get a stiffer penalty, as in OSQP.
  double rho_base = settings.rho;
  auto rho_vec = [&](double base) {
    Eigen::VectorXd r(mc);
    for (int i = 0; i < mc; ++i) {
      r[i] = (s.L[i] == s.U[i]) ? base * 1e3 : base;
    }
    return r;
  };
  Eigen::VectorXd rho = rho_vec(rho_base);

  auto factor = [&](const Eigen::VectorXd& rho_now) {
    Eigen::MatrixXd K = H + settings.sigma * Eigen::MatrixXd::Identity(v, v) +
                        s.M.transpose() * rho_now.asDiagonal() * s.M;
    return Eigen::LDLT<Eigen::MatrixXd>(K);
  };
  Eigen::LDLT<Eigen::MatrixXd> kkt = factor(rho);

  QpSolution sol;
  sol.x = (warm && warm->x.size() == v) ? warm->x : Eigen::VectorXd::Zero(v);
  sol.y = (warm && warm->y.size() == mc) ? warm->y : Eigen::VectorXd::Zero(mc);
  Eigen::VectorXd z = (s.M * sol.x).cwiseMax(s.L).cwiseMin(s.U);

  const double a = settings.alpha;
  constexpr int kCheckEvery = 25;
  constexpr double kEpsInfeas = 1e-10;

  for (int iter = 1; iter <= settings.max_iterations; ++iter) {
    const Eigen::VectorXd rhs =
        settings.sigma * sol.x - g + s.M.transpose() * (rho.cwiseProduct(z) - sol.y);
    const Eigen::VectorXd x_tilde = kkt.solve(rhs);
    const Eigen::VectorXd z_tilde = s.M * x_tilde;

    sol.x = a * x_tilde + (1.0 - a) * sol.x;
    const Eigen::VectorXd z_relaxed = a * z_tilde + (1.0 - a) * z;
    const Eigen::VectorXd z_next =
        (z_relaxed + rho.cwiseInverse().cwiseProduct(sol.y)).cwiseMax(s.L).cwiseMin(s.U);
    const Eigen::VectorXd y_next = sol.y + rho.cwiseProduct(z_relaxed - z_next);
    const Eigen::VectorXd delta_y = y_next - sol.y;
    sol.y = y_next;
    z = z_next;
    sol.iterations = iter;

    if (iter % kCheckEvery == 0 || iter == settings.max_iterations) {
      const Eigen::VectorXd mx = s.M * sol.x;
      const double r_prim = (mx - z).cwiseAbs().maxCoeff();
      const double r_dual =
          (H * sol.x + g + s.M.transpose() * sol.y).cwiseAbs().maxCoeff();
      sol.primal_residual = r_prim;
      sol.dual_residual = r_dual;

      const double eps_prim =
          settings.eps_abs +
          settings.eps_rel * std::max(mx.cwiseAbs().maxCoeff(), z.cwiseAbs().maxCoeff());
      const double eps_dual =
          settings.eps_abs +
          settings.eps_rel * std::max({(H * sol.x).cwiseAbs().maxCoeff(),
                                       g.cwiseAbs().maxCoeff(),
                                       (s.M.transpose() * sol.y).cwiseAbs().maxCoeff()});
      if (r_prim <= eps_prim && r_dual <= eps_dual) {
        sol.status = QpStatus::Optimal;
        break;
      }

      // Primal infeasibility certificate from the dual direction.
      const double dy_norm = delta_y.cwiseAbs().maxCoeff();
      if (dy_norm > kEpsInfeas) {
        const Eigen::VectorXd dyn = delta_y / dy_norm;
        double support = 0.0;
        bool bounded = true;
        for (int i = 0; i < mc; ++i) {
          if (dyn[i] > kEpsInfeas) {
            if (s.U[i] >= kInf) { bounded = false; break; }
            support += s.U[i] * dyn[i];
          } else if (dyn[i] < -kEpsInfeas) {
            if (s.L[i] <= -kInf) { bounded = false; break; }
            support += s.L[i] * dyn[i];
          }
        }
        const double mt_dy = (s.M.transpose() * dyn).cwiseAbs().maxCoeff();
        if (bounded && mt_dy <= 1e-8 && support <= -1e-8) {
          sol.status = QpStatus::PrimalInfeasible;
          return sol;
        }
      }

      // Adaptive penalty keeps the two residuals balanced.
      if (iter % (4 * kCheckEvery) == 0 && iter < settings.max_iterations) {
        const double prim_rel = r_prim / std::max(1e-12, std::max(mx.cwiseAbs().maxCoeff(),
                                                                  z.cwiseAbs().maxCoeff()));
        const double dual_rel =
            r_dual / std::max(1e-12, std::max({(H * sol.x).cwiseAbs().maxCoeff(),
                                               g.cwiseAbs().maxCoeff(),
                                               (s.M.transpose() * sol.y).cwiseAbs().maxCoeff()}));
        const double ratio = std::sqrt(prim_rel / std::max(dual_rel, 1e-16));
        if (ratio > 5.0 || ratio < 0.2) {
          rho_base = std::clamp(rho_base * ratio, 1e-6, 1e6);
          rho = rho_vec(rho_base);
          kkt = factor(rho);
        }
      }
    }
  }

  if (sol.status == QpStatus::Optimal && settings.polish) {
    polish(H, g, s, sol);
  }
  return sol;
}

namespace {

/// Lawson-Hanson nonnegative least squares: argmin_{u >= 0} |b - D u|_2.
/// Problems here have at most a few dozen columns.
Eigen::VectorXd nnls(const Eigen::MatrixXd& D, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(D.cols());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  if (n == 0) return u;
  std::vector<bool> passive(n, false);
  const double tol = 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff());

  for (int outer = 0; outer < 3 * n + 30; ++outer) {
    const Eigen::VectorXd w = D.transpose() * (b - D * u);
    int best = -1;
    double best_w = tol;
    for (int i = 0; i < n; ++i) {
      if (!passive[i] && w[i] > best_w) {
        best_w = w[i];
        best = i;
      }
    }
    if (best < 0) break;
    passive[best] = true;

    for (int inner = 0; inner < 3 * n + 30; ++inner) {
      std::vector<int> idx;
      for (int i = 0; i < n; ++i) {
        if (passive[i]) idx.push_back(i);
      }
      Eigen::MatrixXd Dp(D.rows(), idx.size());
      for (size_t k = 0; k < idx.size(); ++k) Dp.col(k) = D.col(idx[k]);
      const Eigen::VectorXd sp = Dp.colPivHouseholderQr().solve(b);

      bool feasible = true;
      for (size_t k = 0; k < idx.size(); ++k) {
        if (sp[k] <= 0.0) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        u.setZero();
        for (size_t k = 0; k < idx.size(); ++k) u[idx[k]] = sp[k];
        break;
      }
      double alpha = 1.0;
      for (size_t k = 0; k < idx.size(); ++k) {
        if (sp[k] <= 0.0) {
          alpha = std::min(alpha, u[idx[k]] / (u[idx[k]] - sp[k]));
        }
      }
      for (size_t k = 0; k < idx.size(); ++k) {
        u[idx[k]] += alpha * (sp[k] - u[idx[k]]);
        if (u[idx[k]] <= 1e-14) {
          u[idx[k]] = 0.0;
          passive[idx[k]] = false;
        }
      }
    }
  }
  return u;
}

}  // namespace

std::pair<double, double> kkt_residual(const QpProblem& problem, const Eigen::VectorXd& x) {
  validate_problem(problem);
  if (x.size() != problem.num_vars()) {
    throw std::invalid_argument("kkt_residual: x size mismatch");
  }
  const Stacked s = stack_constraints(problem);
  const int mc = static_cast<int>(s.L.size());
  const Eigen::VectorXd mx = s.M * x;

  double primal = 0.0;
  for (int i = 0; i < mc; ++i) {
    if (s.L[i] > -kInf) primal = std::max(primal, s.L[i] - mx[i]);
    if (s.U[i] < kInf) primal = std::max(primal, mx[i] - s.U[i]);
  }

  // Stationarity under the best sign-feasible multipliers for the active set:
  // lower-active rows push along -row, upper-active along +row.
  std::vector<Eigen::VectorXd> columns;
  for (int i = 0; i < mc; ++i) {
    const double tol_act = 1e-7 * (1.0 + std::min(std::abs(s.L[i]), std::abs(s.U[i])));
    if (s.U[i] < kInf && mx[i] >= s.U[i] - tol_act) {
      columns.push_back(s.M.row(i).transpose());
    }
    if (s.L[i] > -kInf && mx[i] <= s.L[i] + tol_act) {
      columns.push_back(-s.M.row(i).transpose());
    }
  }
  Eigen::MatrixXd D(x.size(), columns.size());
  for (size_t k = 0; k < columns.size(); ++k) D.col(k) = columns[k];

  const Eigen::VectorXd r0 = problem.H * x + problem.g;
  const Eigen::VectorXd u = nnls(D, -r0);
  const double stationarity =
      columns.empty() ? r0.cwiseAbs().maxCoeff() : (r0 + D * u).cwiseAbs().maxCoeff();
  return {primal, stationarity};
}

}  // namespace safecor
