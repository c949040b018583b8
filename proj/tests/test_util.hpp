// Shared helpers for the test suites: deterministic random inputs,
// finite-difference oracles, and brute-force grid minimizers. The oracles
// here are intentionally independent of the library's solver paths.

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <random>
#include <vector>

#include "driftio/allocation.hpp"

namespace testutil {

using driftio::Matrix;
using driftio::Vector;

inline std::mt19937& rng() {
  static std::mt19937 gen(20240617u);
  return gen;
}

// Reseed at the top of randomized test cases so each case is deterministic
// regardless of execution order or filtering.
inline void reseed(unsigned seed) { rng().seed(seed); }

inline double uniform(double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng());
}

inline Vector random_vector(Eigen::Index n, double lo, double hi) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
  return v;
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, double lo, double hi) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = uniform(lo, hi);
  return m;
}

// Central finite differences of a scalar function of a vector.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline double rel_error(const Vector& a, const Vector& b) {
  const double scale = std::max({1e-12, a.norm(), b.norm()});
  return (a - b).norm() / scale;
}

// Exact brute-force grid minima for quadratic objectives. Every objective in
// this project is quadratic, so along one coordinate (others fixed) the
// function is a parabola and its minimum over a uniform grid segment lies at
// the segment ends or at the grid neighbors of the parabola vertex. Sweeping
// the remaining coordinates exhaustively therefore reproduces the full-grid
// minimum exactly without visiting every node.

// Minimum of a*t^2 + b*t + c over {lo, lo+res, ..., <= hi}; with
// include_hi_exact the segment endpoint hi itself joins the candidate set
// (used when hi is a feasibility boundary of X rather than a box wall).
inline double quad_grid_min_1d(double a, double b, double c, double lo, double hi, double res,
                               bool include_hi_exact = false) {
  if (hi < lo) return std::numeric_limits<double>::infinity();
  const long last = static_cast<long>(std::floor((hi - lo) / res + 1e-12));
  auto eval_at = [&](double t) { return a * t * t + b * t + c; };
  auto eval_idx = [&](long i) { return eval_at(lo + static_cast<double>(i) * res); };
  double best = std::min(eval_idx(0), eval_idx(last));
  if (include_hi_exact) best = std::min(best, eval_at(hi));
  if (a > 0.0) {
    const double v = (-b / (2.0 * a) - lo) / res;
    for (long i : {static_cast<long>(std::floor(v)), static_cast<long>(std::floor(v)) + 1}) {
      if (i >= 0 && i <= last) best = std::min(best, eval_idx(i));
    }
  }
  return best;
}

// Fits f restricted to coordinate j (others fixed at x) as a parabola via
// three evaluations; exact for quadratic f.
struct Parabola {
  double a, b, c;
};
inline Parabola fit_parabola(const std::function<double(const Vector&)>& f, Vector x,
                             Eigen::Index j) {
  x(j) = 0.0;
  const double f0 = f(x);
  x(j) = 1.0;
  const double f1 = f(x);
  x(j) = 2.0;
  const double f2 = f(x);
  const double a = (f2 - 2.0 * f1 + f0) / 2.0;
  return {a, f1 - f0 - a, f0};
}

// Exact grid minimum of a quadratic f over the box prod [lo_i, hi_i] at a
// uniform resolution, for dimension k <= 2: outer coordinates are swept
// exhaustively, the last coordinate analytically.
inline double quadratic_box_grid_min(const std::function<double(const Vector&)>& f,
                                     const Vector& lo, const Vector& hi, double res) {
  const Eigen::Index k = lo.size();
  if (k == 1) {
    const Parabola p = fit_parabola(f, Vector::Zero(1), 0);
    return quad_grid_min_1d(p.a, p.b, p.c, lo(0), hi(0), res);
  }
  double best = std::numeric_limits<double>::infinity();
  const long n0 = static_cast<long>(std::floor((hi(0) - lo(0)) / res + 1e-12));
  Vector x = Vector::Zero(2);
  for (long i = 0; i <= n0; ++i) {
    x(0) = lo(0) + static_cast<double>(i) * res;
    const Parabola p = fit_parabola(f, x, 1);
    best = std::min(best, quad_grid_min_1d(p.a, p.b, p.c, lo(1), hi(1), res));
  }
  return best;
}

// Exact grid minimum of a quadratic objective over the polytope
// {x >= 0, Bx <= q, x <= xu} with B >= 0 entrywise: for fixed outer
// coordinates the feasible range of the last coordinate is an interval.
// Dimensions n <= 3.
inline double quadratic_polytope_grid_min(const std::function<double(const Vector&)>& f,
                                          const Matrix& B, const Vector& q,
                                          const std::optional<Vector>& xu, const Vector& box_hi,
                                          double res = 1e-3) {
  const Eigen::Index n = B.cols();
  const Eigen::Index last = n - 1;
  double best = std::numeric_limits<double>::infinity();

  std::function<void(Vector&, Eigen::Index)> sweep = [&](Vector& x, Eigen::Index dim) {
    if (dim == last) {
      // Feasible interval for the last coordinate given the outer ones.
      double ub = box_hi(last);
      if (xu) ub = std::min(ub, (*xu)(last));
      for (Eigen::Index r = 0; r < B.rows(); ++r) {
        double used = 0.0;
        for (Eigen::Index jj = 0; jj < last; ++jj) used += B(r, jj) * x(jj);
        if (B(r, last) > 1e-12) ub = std::min(ub, (q(r) - used) / B(r, last));
        else if (used > q(r) + 1e-12) return;  // outer coords already infeasible
      }
      if (ub < 0.0) return;
      const Parabola p = fit_parabola(f, x, last);
      best = std::min(best, quad_grid_min_1d(p.a, p.b, p.c, 0.0, ub, res, true));
      return;
    }
    double ub = box_hi(dim);
    if (xu) ub = std::min(ub, (*xu)(dim));
    const long steps = static_cast<long>(std::floor(ub / res + 1e-12));
    for (long i = 0; i <= steps; ++i) {
      x(dim) = static_cast<double>(i) * res;
      sweep(x, dim + 1);
    }
  };

  Vector x = Vector::Zero(n);
  sweep(x, 0);
  return best;
}

// Exact grid oracle for the dual term inf_{lambda in grid} ||g + B^T lambda||^2
// over lambda in [0, box]^k at the stated resolution.
inline double dual_gap_grid_oracle(const Vector& g, const Matrix& B, double box = 10.0,
                                   double res = 1e-3) {
  auto f = [&](const Vector& lam) { return (g + B.transpose() * lam).squaredNorm(); };
  const Eigen::Index k = B.rows();
  return quadratic_box_grid_min(f, Vector::Zero(k), Vector::Constant(k, box), res);
}

}  // namespace testutil
