// Small dense linear-algebra kernels shared by the solver and the losses:
// the nullspace projector P = I - B^T (B B^T)^+ B, an active-set nonnegative
// least squares solver, and Dykstra's alternating projection onto the
// feasible polytope.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "driftio/allocation.hpp"

namespace driftio {

// Orthogonal projector onto ker(B). Symmetric, idempotent, annihilates B^T.
struct Projector {
  Matrix P;
  int b_rank = 0;
};

// Rank-revealing construction through the SVD of B: with B = U S V^T and
// V_r the right singular vectors above the cutoff, P = I - V_r V_r^T.
// Singular values below 1e-10 * sigma_max are treated as zero.
inline Projector build_projector(const Matrix& B, double sv_cutoff_rel = 1e-10) {
  detail::check_finite(B, "B");
  const Eigen::Index n = B.cols();
  Projector out;
  if (B.size() == 0 || B.lpNorm<Eigen::Infinity>() == 0.0) {
    out.P = Matrix::Identity(n, n);
    out.b_rank = 0;
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(B, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = sv_cutoff_rel * sv(0);
  int r = 0;
  while (r < sv.size() && sv(r) > cutoff) ++r;
  const Matrix Vr = svd.matrixV().leftCols(r);
  out.P = Matrix::Identity(n, n) - Vr * Vr.transpose();
  out.b_rank = r;
  return out;
}

inline double projector_symmetry_defect(const Projector& pr) {
  return (pr.P - pr.P.transpose()).lpNorm<Eigen::Infinity>();
}

inline double projector_idempotence_defect(const Projector& pr) {
  return (pr.P * pr.P - pr.P).lpNorm<Eigen::Infinity>();
}

inline double projector_annihilation_defect(const Projector& pr, const Matrix& B) {
  return (pr.P * B.transpose()).lpNorm<Eigen::Infinity>();
}

// ---------------------------------------------------------------------------
// Nonnegative least squares
// ---------------------------------------------------------------------------

struct NnlsResult {
  Vector x;            // the minimizer, >= 0
  double residual_sq;  // ||A x - b||^2 at the minimizer
  int iterations = 0;
  bool converged = true;
};

// Lawson-Hanson active-set method for min_{x >= 0} ||A x - b||^2.
// Deterministic; the passive-set least squares subproblems are solved by
// column-pivoted QR. Stationarity tolerance is absolute after scaling by
// max(1, ||A^T b||_inf).
inline NnlsResult nnls(const Matrix& A, const Vector& b, double tol = 1e-10,
                       int max_outer = 0) {
  const Eigen::Index m = A.rows();
  const Eigen::Index nvar = A.cols();
  detail::check(b.size() == m, "nnls: b length vs A rows");
  if (max_outer <= 0) max_outer = static_cast<int>(8 * std::max<Eigen::Index>(nvar, 4));

  NnlsResult out;
  out.x = Vector::Zero(nvar);
  std::vector<bool> passive(nvar, false);

  const double scale = std::max(1.0, (A.transpose() * b).lpNorm<Eigen::Infinity>());
  const double wtol = tol * scale;

  auto solve_passive = [&](const std::vector<bool>& pset) -> Vector {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < nvar; ++j)
      if (pset[j]) idx.push_back(j);
    Vector z = Vector::Zero(nvar);
    if (idx.empty()) return z;
    Matrix Ap(m, static_cast<Eigen::Index>(idx.size()));
    for (size_t c = 0; c < idx.size(); ++c) Ap.col(static_cast<Eigen::Index>(c)) = A.col(idx[c]);
    Vector zp = Ap.colPivHouseholderQr().solve(b);
    for (size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(static_cast<Eigen::Index>(c));
    return z;
  };

  int outer = 0;
  while (outer < max_outer) {
    Vector w = A.transpose() * (b - A * out.x);
    // Most-violating candidate among the active (zero) variables.
    int best = -1;
    double bestw = wtol;
    for (Eigen::Index j = 0; j < nvar; ++j) {
      if (!passive[j] && w(j) > bestw) {
        bestw = w(j);
        best = static_cast<int>(j);
      }
    }
    if (best < 0) break;  // stationary
    ++outer;
    passive[best] = true;

    // Inner loop: restore feasibility of the passive-set solution.
    int inner_guard = 0;
    while (true) {
      Vector z = solve_passive(passive);
      bool all_pos = true;
      for (Eigen::Index j = 0; j < nvar; ++j) {
        if (passive[j] && z(j) <= 0.0) {
          all_pos = false;
          break;
        }
      }
      if (all_pos) {
        out.x = z;
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < nvar; ++j) {
        if (passive[j] && z(j) <= 0.0) {
          const double denom = out.x(j) - z(j);
          if (denom > 0.0) alpha = std::min(alpha, out.x(j) / denom);
        }
      }
      if (!std::isfinite(alpha)) alpha = 0.0;
      out.x += alpha * (z - out.x);
      for (Eigen::Index j = 0; j < nvar; ++j) {
        if (passive[j] && out.x(j) <= tol * scale) {
          out.x(j) = 0.0;
          passive[j] = false;
        }
      }
      if (++inner_guard > 4 * nvar) break;  // anti-cycling guard
    }
  }

  out.iterations = outer;
  out.converged = outer < max_outer;
  out.residual_sq = (A * out.x - b).squaredNorm();
  return out;
}

// ---------------------------------------------------------------------------
// Projection onto the feasible polytope
// ---------------------------------------------------------------------------

// Exact least-distance projection min ||x - v|| s.t. G x <= h, via the
// Lawson-Hanson reduction to NNLS. Used as a cleanup when the alternating
// projection stalls on thin-wedge geometry.
inline Vector project_polyhedron_ldp(const Matrix& G, const Vector& h, const Vector& v) {
  const Eigen::Index n = G.cols();
  const Eigen::Index m = G.rows();
  // Shifted problem: min ||z|| s.t. (-G) z >= -(h - G v).
  const Vector ht = h - G * v;
  Matrix E(n + 1, m);
  E.topRows(n) = -G.transpose();
  E.row(n) = -ht.transpose();
  Vector f = Vector::Zero(n + 1);
  f(n) = 1.0;
  const NnlsResult r = nnls(E, f, 1e-13);
  const Vector resid = E * r.x - f;
  if (std::abs(resid(n)) < 1e-14) return v;  // numerically infeasible system
  Vector z(n);
  for (Eigen::Index j = 0; j < n; ++j) z(j) = -resid(j) / resid(n);
  return v + z;
}

// Dykstra's alternating projection between the box [0, x_upper] and each
// halfspace {x : B_i x <= q_i}. Returns the Euclidean projection of v onto
// the intersection. Fixed sweep cap and tolerance per the solver contract;
// if the sweeps stall short of feasibility the exact NNLS projection
// finishes the job.
inline Vector project_feasible(const Matrix& B, const Vector& q,
                               const std::optional<Vector>& x_upper, const Vector& v,
                               double tol = 1e-10, int max_sweeps = 500) {
  const Eigen::Index n = v.size();
  const Eigen::Index k = B.rows();
  detail::check(B.cols() == n, "project_feasible: B cols vs v length");
  detail::check(q.size() == k, "project_feasible: q length vs B rows");

  // Precompute halfspace row norms; zero rows impose no constraint (q >= 0).
  std::vector<double> row_norm2(static_cast<size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) row_norm2[static_cast<size_t>(i)] = B.row(i).squaredNorm();

  auto clip_box = [&](Vector x) {
    x = x.cwiseMax(0.0);
    if (x_upper) x = x.cwiseMin(*x_upper);
    return x;
  };

  Vector x = v;
  // One correction increment per set: box first, then each halfspace.
  std::vector<Vector> incr(static_cast<size_t>(k) + 1, Vector::Zero(n));

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;

    {
      const Vector y = x + incr[0];
      const Vector proj = clip_box(y);
      incr[0] = y - proj;
      change = std::max(change, (proj - x).lpNorm<Eigen::Infinity>());
      x = proj;
    }
    for (Eigen::Index i = 0; i < k; ++i) {
      const size_t s = static_cast<size_t>(i) + 1;
      const Vector y = x + incr[s];
      Vector proj = y;
      if (row_norm2[static_cast<size_t>(i)] > 0.0) {
        const double viol = B.row(i).dot(y) - q(i);
        if (viol > 0.0) proj = y - (viol / row_norm2[static_cast<size_t>(i)]) * B.row(i).transpose();
      }
      incr[s] = y - proj;
      change = std::max(change, (proj - x).lpNorm<Eigen::Infinity>());
      x = proj;
    }

    if (change <= tol) break;
  }

  // Feasibility guard for ill-conditioned wedges where the sweep cap binds.
  double viol = (-x).maxCoeff();
  if (k > 0) viol = std::max(viol, (B * x - q).maxCoeff());
  if (x_upper) viol = std::max(viol, (x - *x_upper).maxCoeff());
  if (viol > 1e-9) {
    const Eigen::Index m = k + n + (x_upper ? n : 0);
    Matrix G = Matrix::Zero(m, n);
    Vector h = Vector::Zero(m);
    G.topRows(k) = B;
    h.head(k) = q;
    G.block(k, 0, n, n) = -Matrix::Identity(n, n);
    if (x_upper) {
      G.bottomRows(n) = Matrix::Identity(n, n);
      h.tail(n) = *x_upper;
    }
    x = project_polyhedron_ldp(G, h, v);
  }
  return x;
}

inline Vector project_feasible(const AllocationProblem& p, const Vector& v,
                               double tol = 1e-10, int max_sweeps = 500) {
  return project_feasible(p.B, p.q, p.x_upper, v, tol, max_sweeps);
}

// Worst constraint violation of x over X; <= 0 means feasible.
inline double feasibility_violation(const Matrix& B, const Vector& q,
                                    const std::optional<Vector>& x_upper, const Vector& x) {
  double viol = (-x).maxCoeff();
  if (B.rows() > 0) viol = std::max(viol, (B * x - q).maxCoeff());
  if (x_upper) viol = std::max(viol, (x - *x_upper).maxCoeff());
  return viol;
}

}  // namespace driftio
