// Forward allocation solver: x*(theta) = argmin_{x in X} c(x; theta) over the
// polytope X = {x >= 0 : Bx <= q, x <= x_upper}, by projected gradient
// descent with backtracking. Multipliers are recovered from the active set by
// nonnegative least squares on the stationarity condition, and convergence is
// certified through the combined KKT residual.
//
// Linear costs have flat directions over X, so for the LinearPenalty family a
// strictly convex Tikhonov term rho * ||x - center||^2 is added inside the
// solver (never to the cost definition itself). rho and the anchor are part
// of the solver options and are echoed into run metadata by the experiment
// layer.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "driftio/allocation.hpp"
#include "driftio/linalg.hpp"

namespace driftio {

struct SolverOptions {
  double tol = 1e-8;   // KKT residual target
  int max_iter = 10000;

  // Tikhonov regularization, LinearPenalty family only.
  double tikhonov_rho = 1e-3;
  Vector tikhonov_center;  // empty => origin

  std::optional<Vector> start;  // defaults to the always-feasible x = 0
  double active_tol = 1e-6;     // activity threshold for multiplier recovery
  double proj_tol = 1e-10;
  int proj_max_sweeps = 500;

  std::vector<double>* objective_trace = nullptr;  // test instrumentation
};

// Stacked canonical inequality system G x <= h:
// k resource rows, then n nonnegativity rows, then n upper-bound rows.
struct StackedConstraints {
  Matrix G;
  Vector h;
};

inline StackedConstraints stacked_constraints(const AllocationProblem& p) {
  const Eigen::Index n = p.n();
  const Eigen::Index k = p.k();
  const Eigen::Index m = k + n + (p.x_upper ? n : 0);
  StackedConstraints sc;
  sc.G = Matrix::Zero(m, n);
  sc.h = Vector::Zero(m);
  sc.G.topRows(k) = p.B;
  sc.h.head(k) = p.q;
  sc.G.block(k, 0, n, n) = -Matrix::Identity(n, n);
  if (p.x_upper) {
    sc.G.block(k + n, 0, n, n) = Matrix::Identity(n, n);
    sc.h.tail(n) = *p.x_upper;
  }
  return sc;
}

struct ForwardSolution {
  Vector x_star;
  Vector lambda_star;   // canonical order, length k + n (+ n)
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;  // regularized objective at x_star
};

namespace detail {

inline bool solver_regularized(const AllocationProblem& p, const SolverOptions& opt) {
  return p.cost.kind == CostKind::LinearPenalty && opt.tikhonov_rho > 0.0;
}

inline double solver_objective(const AllocationProblem& p, const SolverOptions& opt,
                               const Vector& x) {
  double v = cost_value(p, x);
  if (solver_regularized(p, opt)) {
    if (opt.tikhonov_center.size() > 0)
      v += opt.tikhonov_rho * (x - opt.tikhonov_center).squaredNorm();
    else
      v += opt.tikhonov_rho * x.squaredNorm();
  }
  return v;
}

inline Vector solver_gradient(const AllocationProblem& p, const SolverOptions& opt,
                              const Vector& x) {
  Vector g = cost_gradient(p, x);
  if (solver_regularized(p, opt)) {
    if (opt.tikhonov_center.size() > 0)
      g += 2.0 * opt.tikhonov_rho * (x - opt.tikhonov_center);
    else
      g += 2.0 * opt.tikhonov_rho * x;
  }
  return g;
}

// lambda >= 0 supported on the constraints active within active_tol,
// minimizing ||grad + G^T lambda||^2 over that support.
inline Vector recover_multipliers(const StackedConstraints& sc, const Vector& x,
                                  const Vector& grad, double active_tol) {
  const Eigen::Index m = sc.G.rows();
  const Vector slack = sc.G * x - sc.h;
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < m; ++i)
    if (slack(i) >= -active_tol) active.push_back(i);

  Vector lambda = Vector::Zero(m);
  if (active.empty()) return lambda;

  Matrix At(x.size(), static_cast<Eigen::Index>(active.size()));
  for (size_t c = 0; c < active.size(); ++c)
    At.col(static_cast<Eigen::Index>(c)) = sc.G.row(active[c]).transpose();
  const NnlsResult r = nnls(At, -grad);
  for (size_t c = 0; c < active.size(); ++c) lambda(active[c]) = r.x(static_cast<Eigen::Index>(c));
  return lambda;
}

inline double kkt_residual_value(const StackedConstraints& sc, const Vector& x,
                                 const Vector& grad, const Vector& lambda) {
  const double stationarity = (grad + sc.G.transpose() * lambda).lpNorm<Eigen::Infinity>();
  const double complementarity = std::abs(lambda.dot(sc.G * x - sc.h));
  return stationarity + complementarity;
}

}  // namespace detail

/// Combined stationarity + complementarity residual at (x, lambda); zero iff
/// the pair solves the KKT system of the (possibly regularized) problem.
inline double verify_kkt(const AllocationProblem& p, const Vector& x, const Vector& lambda,
                         const SolverOptions& opt = {}) {
  p.validate();
  const StackedConstraints sc = stacked_constraints(p);
  detail::check(x.size() == p.n(), "verify_kkt: x length");
  detail::check(lambda.size() == sc.G.rows(), "verify_kkt: lambda length");
  return detail::kkt_residual_value(sc, x, detail::solver_gradient(p, opt, x), lambda);
}

/// Minimizer of the (possibly regularized) cost over X with certified KKT
/// residual. Non-convergence is reported explicitly, never silently.
inline ForwardSolution solve_forward(const AllocationProblem& p, const SolverOptions& opt = {}) {
  p.validate();
  const StackedConstraints sc = stacked_constraints(p);

  auto project = [&](const Vector& v) {
    return project_feasible(p.B, p.q, p.x_upper, v, opt.proj_tol, opt.proj_max_sweeps);
  };

  Vector x = opt.start ? project(*opt.start) : Vector::Zero(p.n());

  // Gradient Lipschitz constant; both families are quadratic so this is exact.
  double lips;
  if (p.cost.kind == CostKind::QuadraticFairness) {
    lips = 2.0 + 2.0 * p.cost.fairness_weight;
  } else {
    lips = 2.0 * opt.tikhonov_rho;
  }

  double obj = detail::solver_objective(p, opt, x);
  if (opt.objective_trace) opt.objective_trace->push_back(obj);

  ForwardSolution sol;
  sol.x_star = x;
  sol.kkt_residual = std::numeric_limits<double>::infinity();

  double best_resid = std::numeric_limits<double>::infinity();
  int stall = 0;

  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    const Vector grad = detail::solver_gradient(p, opt, x);
    const Vector lambda = detail::recover_multipliers(sc, x, grad, opt.active_tol);
    const double resid = detail::kkt_residual_value(sc, x, grad, lambda);

    if (resid < best_resid - 1e-16) {
      best_resid = resid;
      stall = 0;
    } else {
      ++stall;
    }
    sol.x_star = x;
    sol.lambda_star = lambda;
    sol.kkt_residual = resid;
    sol.objective = obj;
    if (resid <= opt.tol) {
      sol.converged = true;
      break;
    }
    if (stall > 50) break;  // no progress left at this precision

    double step = lips > 1e-12 ? 1.0 / lips : (1.0 + p.q.lpNorm<Eigen::Infinity>()) /
                                                  (1.0 + grad.norm());
    bool accepted = false;
    Vector xp;
    double objp = obj;
    for (int bt = 0; bt < 60; ++bt) {
      xp = project(x - step * grad);
      const Vector d = xp - x;
      objp = detail::solver_objective(p, opt, xp);
      // Sufficient-decrease condition of the projected step; together with
      // the projection inequality it forces a monotone objective.
      if (objp <= obj + grad.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-15) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // line search exhausted at floating-point precision
    x = xp;
    obj = objp;
    if (opt.objective_trace) opt.objective_trace->push_back(objp);
  }

  sol.iterations = iter;
  return sol;
}

}  // namespace driftio
