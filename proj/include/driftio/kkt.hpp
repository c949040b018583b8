// Inverse losses and their subgradients. Two losses are implemented and
// selectable per run:
//
//   * the KKT-violation loss: primal feasibility gap + nonnegative
//     least-squares dual gap + complementarity gap, evaluated at an observed
//     allocation, with the complementarity term reusing the dual gap's
//     argmin multiplier so the loss is a function of theta alone;
//   * the decision loss ||x_obs - x*(theta)||^2 through the forward solver.
//
// Also hosts the identifiability certificate built from the projected
// parameter Jacobians P_t A_t(x_t).

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "driftio/allocation.hpp"
#include "driftio/forward.hpp"
#include "driftio/linalg.hpp"

namespace driftio {

struct ForwardSolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Dual feasibility gap
// ---------------------------------------------------------------------------

struct DualGapResult {
  double value = 0.0;  // inf_{lambda >= 0} ||g + B^T lambda||^2
  Vector lambda;       // a minimizer (active-set path result)
};

/// Exact infimum of the nonnegative least-squares dual term.
inline DualGapResult dual_gap(const Vector& g, const Matrix& B, double tol = 1e-10) {
  detail::check(B.cols() == g.size(), "dual_gap: B cols vs g length");
  const NnlsResult r = nnls(B.transpose(), -g, tol);
  DualGapResult out;
  out.lambda = r.x;
  out.value = (g + B.transpose() * r.x).squaredNorm();
  return out;
}

// ---------------------------------------------------------------------------
// KKT-violation loss
// ---------------------------------------------------------------------------

struct KktLossBreakdown {
  double primal_gap = 0.0;
  double dual_gap = 0.0;
  double comp_gap = 0.0;
  double total = 0.0;
  Vector lambda_argmin;  // length k
};

inline KktLossBreakdown kkt_loss(const Vector& theta, const Matrix& B, const Vector& q,
                                 const Vector& x_obs, const CostFamily& cost) {
  detail::check(B.cols() == x_obs.size(), "kkt_loss: B cols vs x_obs length");
  detail::check(q.size() == B.rows(), "kkt_loss: q length vs B rows");
  KktLossBreakdown out;
  const Vector slack = B * x_obs - q;
  out.primal_gap = slack.cwiseMax(0.0).squaredNorm();
  const Vector g = cost_gradient(cost, theta, x_obs);
  const DualGapResult dg = dual_gap(g, B);
  out.dual_gap = dg.value;
  out.lambda_argmin = dg.lambda;
  out.comp_gap = std::abs(dg.lambda.dot(slack));
  out.total = out.primal_gap + out.dual_gap + out.comp_gap;
  return out;
}

namespace detail {

// Shared core of the subgradient: the dual term differentiates exactly by
// Danskin's theorem; the complementarity term |lambda*(theta)^T slack| is
// piecewise smooth because the dual argmin is piecewise linear in theta (on
// a stable NNLS active set P, lambda_P = -(B_P B_P^T)^-1 B_P g(theta)) and
// that dependence is carried through. At the absolute-value kink the zero
// element is chosen.
inline Vector kkt_subgradient_from(const GradientParamForm& f, const Vector& g,
                                   const DualGapResult& dg, const Matrix& B,
                                   const Vector& slack) {
  Vector sub = 2.0 * f.A.transpose() * (g + B.transpose() * dg.lambda);
  const double comp = dg.lambda.dot(slack);
  if (comp != 0.0) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < dg.lambda.size(); ++i)
      if (dg.lambda(i) > 1e-12) support.push_back(i);
    if (!support.empty()) {
      Matrix Bp(static_cast<Eigen::Index>(support.size()), B.cols());
      Vector sp(static_cast<Eigen::Index>(support.size()));
      for (size_t r = 0; r < support.size(); ++r) {
        Bp.row(static_cast<Eigen::Index>(r)) = B.row(support[r]);
        sp(static_cast<Eigen::Index>(r)) = slack(support[r]);
      }
      // d(comp)/dtheta = sign(comp) * (dlambda/dtheta)^T s_P
      //               = -sign(comp) * A^T B_P^T (B_P B_P^T)^-1 s_P.
      const Vector u = (Bp * Bp.transpose()).ldlt().solve(sp);
      const double sign = comp > 0.0 ? 1.0 : -1.0;
      sub -= sign * f.A.transpose() * (Bp.transpose() * u);
    }
  }
  return sub;
}

}  // namespace detail

inline Vector kkt_loss_subgradient(const Vector& theta, const Matrix& B, const Vector& q,
                                   const Vector& x_obs, const CostFamily& cost) {
  detail::check(B.cols() == x_obs.size(), "kkt_loss_subgradient: B cols vs x_obs length");
  detail::check(q.size() == B.rows(), "kkt_loss_subgradient: q length vs B rows");
  const GradientParamForm f = gradient_param_form(cost, x_obs);
  const Vector g = f.A * theta + f.b;
  const DualGapResult dg = dual_gap(g, B);
  return detail::kkt_subgradient_from(f, g, dg, B, B * x_obs - q);
}

// Loss and subgradient from one dual-gap solve.
struct KktEval {
  KktLossBreakdown breakdown;
  Vector subgradient;
};

inline KktEval kkt_loss_eval(const Vector& theta, const Matrix& B, const Vector& q,
                             const Vector& x_obs, const CostFamily& cost) {
  detail::check(B.cols() == x_obs.size(), "kkt_loss_eval: B cols vs x_obs length");
  detail::check(q.size() == B.rows(), "kkt_loss_eval: q length vs B rows");
  const GradientParamForm f = gradient_param_form(cost, x_obs);
  const Vector g = f.A * theta + f.b;
  const DualGapResult dg = dual_gap(g, B);
  const Vector slack = B * x_obs - q;
  KktEval out;
  out.breakdown.primal_gap = slack.cwiseMax(0.0).squaredNorm();
  out.breakdown.dual_gap = dg.value;
  out.breakdown.lambda_argmin = dg.lambda;
  out.breakdown.comp_gap = std::abs(dg.lambda.dot(slack));
  out.breakdown.total =
      out.breakdown.primal_gap + out.breakdown.dual_gap + out.breakdown.comp_gap;
  out.subgradient = detail::kkt_subgradient_from(f, g, dg, B, slack);
  return out;
}

// ---------------------------------------------------------------------------
// Decision loss
// ---------------------------------------------------------------------------

enum class DecisionGradMethod {
  FiniteDifference,   // central differences, forward problem re-solved per probe
  ActiveSetAnalytic,  // implicit differentiation on the active face
};

struct DecisionLossOptions {
  SolverOptions solver;
  double fd_step = 1e-5;
  DecisionGradMethod method = DecisionGradMethod::FiniteDifference;
};

namespace detail {

inline AllocationProblem with_theta(const AllocationProblem& base, const Vector& theta) {
  AllocationProblem p = base;
  p.theta = theta;
  return p;
}

inline ForwardSolution solve_or_throw(const AllocationProblem& p, const SolverOptions& opt) {
  ForwardSolution sol = solve_forward(p, opt);
  if (!sol.converged) {
    throw ForwardSolveError("forward solver did not converge (residual " +
                            std::to_string(sol.kkt_residual) + ")");
  }
  return sol;
}

// Hessian of the solver objective; exact for both families.
inline Matrix solver_hessian(const AllocationProblem& p, const SolverOptions& opt) {
  const Eigen::Index n = p.n();
  if (p.cost.kind == CostKind::QuadraticFairness) {
    const Matrix C = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / double(n));
    return 2.0 * Matrix::Identity(n, n) + 2.0 * p.cost.fairness_weight * C;
  }
  return 2.0 * opt.tikhonov_rho * Matrix::Identity(n, n);
}

}  // namespace detail

inline double decision_loss(const Vector& theta, const AllocationProblem& base,
                            const Vector& x_obs, const DecisionLossOptions& opt = {}) {
  const ForwardSolution sol = detail::solve_or_throw(detail::with_theta(base, theta), opt.solver);
  return (x_obs - sol.x_star).squaredNorm();
}

// Loss and subgradient together; the analytic path reuses one forward solve
// for both.
struct DecisionEval {
  double loss = 0.0;
  Vector subgradient;
};

/// Subgradient of the decision loss at theta, together with the loss value.
///
/// The default finite-difference path is the defining computation; the
/// analytic path differentiates x*(theta) on the active face (for
/// QuadraticFairness with zero fairness weight this is the active-set
/// projection Jacobian) and agrees with finite differences away from
/// active-set changes.
inline DecisionEval decision_loss_eval(const Vector& theta, const AllocationProblem& base,
                                       const Vector& x_obs,
                                       const DecisionLossOptions& opt = {}) {
  const Eigen::Index p_dim = theta.size();
  DecisionEval out;

  if (opt.method == DecisionGradMethod::FiniteDifference) {
    out.loss = decision_loss(theta, base, x_obs, opt);
    out.subgradient.resize(p_dim);
    for (Eigen::Index i = 0; i < p_dim; ++i) {
      Vector tp = theta, tm = theta;
      tp(i) += opt.fd_step;
      tm(i) -= opt.fd_step;
      const double lp = decision_loss(tp, base, x_obs, opt);
      const double lm = decision_loss(tm, base, x_obs, opt);
      out.subgradient(i) = (lp - lm) / (2.0 * opt.fd_step);
    }
    return out;
  }

  // Analytic path. x*(theta) solves H x + S theta + c0 + G_A^T nu = 0 on the
  // active face G_A x = h_A, so dx/dtheta = -K S with K the H-weighted
  // projection onto the face tangent space.
  const AllocationProblem prob = detail::with_theta(base, theta);
  const ForwardSolution sol = detail::solve_or_throw(prob, opt.solver);
  out.loss = (x_obs - sol.x_star).squaredNorm();

  Matrix H = detail::solver_hessian(prob, opt.solver);
  if (H.norm() < 1e-14) {
    // No curvature (unregularized linear cost): x* is locally constant.
    out.subgradient = Vector::Zero(p_dim);
    return out;
  }

  const StackedConstraints sc = stacked_constraints(prob);
  const Vector slack = sc.G * sol.x_star - sc.h;
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < sc.G.rows(); ++i) {
    if (slack(i) >= -opt.solver.active_tol && sol.lambda_star(i) > 1e-10) active.push_back(i);
  }

  const Matrix S = gradient_param_form(prob.cost, sol.x_star).A;
  Eigen::LDLT<Matrix> Hld(H);
  Matrix K = Hld.solve(Matrix::Identity(H.rows(), H.cols()));
  if (!active.empty()) {
    Matrix Ga(static_cast<Eigen::Index>(active.size()), sol.x_star.size());
    for (size_t r = 0; r < active.size(); ++r) Ga.row(static_cast<Eigen::Index>(r)) = sc.G.row(active[r]);
    const Matrix HiGt = Hld.solve(Ga.transpose());
    const Matrix M = Ga * HiGt;  // G_A H^-1 G_A^T
    K -= HiGt * M.ldlt().solve(HiGt.transpose());
  }
  const Matrix J = -K * S;  // dx*/dtheta
  out.subgradient = -2.0 * J.transpose() * (x_obs - sol.x_star);
  return out;
}

inline Vector decision_loss_subgradient(const Vector& theta, const AllocationProblem& base,
                                        const Vector& x_obs,
                                        const DecisionLossOptions& opt = {}) {
  return decision_loss_eval(theta, base, x_obs, opt).subgradient;
}

// ---------------------------------------------------------------------------
// Identifiability certificate
// ---------------------------------------------------------------------------

struct IdentifiabilityCertificate {
  std::vector<int> per_t_rank;   // rank of P_t A_t(x_t)
  double stacked_sigma_min = 0.0;
  int p = 0;

  bool pointwise_identifiable(int t) const { return per_t_rank.at(static_cast<size_t>(t)) == p; }
  bool stationary_identifiable() const { return stacked_sigma_min > 0.0; }
};

/// Per-period ranks of the projected parameter Jacobians and the smallest
/// singular value of their vertical stack.
inline IdentifiabilityCertificate identifiability_certificate(
    const ObservationSeries& series, const CostFamily& cost, double rank_cutoff_rel = 1e-8) {
  series.validate();
  detail::check(!series.records.empty(), "identifiability_certificate: empty series");
  const Eigen::Index n = series.records.front().B.cols();
  const Eigen::Index p_dim = n;

  IdentifiabilityCertificate cert;
  cert.p = static_cast<int>(p_dim);
  Matrix stack(static_cast<Eigen::Index>(series.records.size()) * n, p_dim);

  Eigen::Index row = 0;
  for (const auto& rec : series.records) {
    const Projector pr = build_projector(rec.B);
    const Matrix At = gradient_param_form(cost, rec.x_tilde).A;
    const Matrix tilde = pr.P * At;
    Eigen::JacobiSVD<Matrix> svd(tilde);
    const auto& sv = svd.singularValues();
    int rank = 0;
    if (sv.size() > 0 && sv(0) > 0.0) {
      const double cutoff = rank_cutoff_rel * sv(0);
      while (rank < sv.size() && sv(rank) > cutoff) ++rank;
    }
    cert.per_t_rank.push_back(rank);
    stack.middleRows(row, n) = tilde;
    row += n;
  }

  Eigen::BDCSVD<Matrix> svd(stack);
  const auto& sv = svd.singularValues();
  cert.stacked_sigma_min = sv.size() == static_cast<Eigen::Index>(p_dim) ? sv(sv.size() - 1) : 0.0;
  return cert;
}

}  // namespace driftio
