// Core domain types: parameterized cost families, per-period allocation
// problems, latent preference trajectories, and observed allocation series.
//
// All types are immutable value objects once constructed; they can be shared
// freely across threads.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftio {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void check_finite(const Vector& v, const std::string& name) {
  if (!v.allFinite()) throw std::invalid_argument(name + " contains NaN/Inf");
}

inline void check_finite(const Matrix& m, const std::string& name) {
  if (!m.allFinite()) throw std::invalid_argument(name + " contains NaN/Inf");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cost families
// ---------------------------------------------------------------------------

enum class CostKind {
  // ||x - theta||^2 + fairness_weight * sum_i (x_i - mean(x))^2
  QuadraticFairness,
  // theta^T x + penalty_weight * penalty_coeffs^T x
  LinearPenalty,
};

inline const char* to_string(CostKind k) {
  return k == CostKind::QuadraticFairness ? "quadratic_fairness" : "linear_penalty";
}

struct CostFamily {
  CostKind kind = CostKind::QuadraticFairness;
  double fairness_weight = 0.0;  // lambda, quadratic family only
  double penalty_weight = 0.0;   // gamma, linear family only
  Vector penalty_coeffs;         // length n, nonnegative; linear family only

  void validate(Eigen::Index n) const {
    detail::check(fairness_weight >= 0.0, "fairness_weight must be >= 0");
    detail::check(penalty_weight >= 0.0, "penalty_weight must be >= 0");
    if (kind == CostKind::LinearPenalty) {
      detail::check(penalty_coeffs.size() == n, "penalty_coeffs must have length n");
      detail::check((penalty_coeffs.array() >= 0.0).all(), "penalty_coeffs must be >= 0");
    }
  }
};

// Linear-in-parameter representation of the cost gradient:
//   grad_x c(x; theta) = A(x) * theta + b(x).
// Both shipped families admit this form exactly.
struct GradientParamForm {
  Matrix A;  // n x p (p == n throughout)
  Vector b;  // n
};

/// Cost value c(x; theta) for a given family.
inline double cost_value(const CostFamily& cost, const Vector& theta, const Vector& x) {
  const Eigen::Index n = x.size();
  detail::check(theta.size() == n, "cost_value: theta/x dimension mismatch");
  detail::check_finite(x, "x");
  detail::check_finite(theta, "theta");
  switch (cost.kind) {
    case CostKind::QuadraticFairness: {
      const double mean = x.mean();
      const double fair = (x.array() - mean).square().sum();
      return (x - theta).squaredNorm() + cost.fairness_weight * fair;
    }
    case CostKind::LinearPenalty: {
      detail::check(cost.penalty_coeffs.size() == n, "cost_value: penalty_coeffs length");
      return theta.dot(x) + cost.penalty_weight * cost.penalty_coeffs.dot(x);
    }
  }
  throw std::logic_error("unreachable cost kind");
}

/// Exact analytic gradient of cost_value with respect to x.
inline Vector cost_gradient(const CostFamily& cost, const Vector& theta, const Vector& x) {
  const Eigen::Index n = x.size();
  detail::check(theta.size() == n, "cost_gradient: theta/x dimension mismatch");
  detail::check_finite(x, "x");
  detail::check_finite(theta, "theta");
  switch (cost.kind) {
    case CostKind::QuadraticFairness: {
      const double mean = x.mean();
      // grad of sum_i (x_i - mean)^2 is 2*(x - mean*1); the mean terms cancel.
      return 2.0 * (x - theta) +
             2.0 * cost.fairness_weight * (x.array() - mean).matrix();
    }
    case CostKind::LinearPenalty: {
      detail::check(cost.penalty_coeffs.size() == n, "cost_gradient: penalty_coeffs length");
      return theta + cost.penalty_weight * cost.penalty_coeffs;
    }
  }
  throw std::logic_error("unreachable cost kind");
}

/// (A, b) with grad_x c(x; theta) == A*theta + b for every theta.
inline GradientParamForm gradient_param_form(const CostFamily& cost, const Vector& x) {
  const Eigen::Index n = x.size();
  detail::check_finite(x, "x");
  GradientParamForm f;
  switch (cost.kind) {
    case CostKind::QuadraticFairness: {
      const double mean = x.mean();
      f.A = -2.0 * Matrix::Identity(n, n);
      f.b = 2.0 * x + 2.0 * cost.fairness_weight * (x.array() - mean).matrix();
      return f;
    }
    case CostKind::LinearPenalty: {
      detail::check(cost.penalty_coeffs.size() == n, "gradient_param_form: penalty_coeffs length");
      f.A = Matrix::Identity(n, n);
      f.b = cost.penalty_weight * cost.penalty_coeffs;
      return f;
    }
  }
  throw std::logic_error("unreachable cost kind");
}

// ---------------------------------------------------------------------------
// Per-period forward instance
// ---------------------------------------------------------------------------

// Feasible set X = { x >= 0 : B x <= q, x <= x_upper } where the upper bound
// is optional. 0 is always feasible since q >= 0.
struct AllocationProblem {
  Matrix B;                       // k x n resource consumption
  Vector q;                       // k capacities, >= 0
  std::optional<Vector> x_upper;  // per-agent caps
  CostFamily cost;
  Vector theta;                   // p == n

  Eigen::Index n() const { return B.cols(); }
  Eigen::Index k() const { return B.rows(); }

  void validate() const {
    detail::check(B.rows() >= 1 && B.cols() >= 1, "B must be nonempty");
    detail::check(q.size() == B.rows(), "q length must equal rows of B");
    detail::check_finite(B, "B");
    detail::check_finite(q, "q");
    detail::check((q.array() >= 0.0).all(), "q must be >= 0");
    detail::check(theta.size() == B.cols(), "theta length must equal cols of B");
    detail::check_finite(theta, "theta");
    if (x_upper) {
      detail::check(x_upper->size() == B.cols(), "x_upper length must equal cols of B");
      detail::check((x_upper->array() >= 0.0).all(), "x_upper must be >= 0");
    }
    cost.validate(B.cols());
  }
};

inline double cost_value(const AllocationProblem& p, const Vector& x) {
  return cost_value(p.cost, p.theta, x);
}

inline Vector cost_gradient(const AllocationProblem& p, const Vector& x) {
  return cost_gradient(p.cost, p.theta, x);
}

inline GradientParamForm param_jacobian(const AllocationProblem& p, const Vector& x) {
  return gradient_param_form(p.cost, x);
}

// Hyperrectangle parameter domain Theta = prod_i [lo_i, hi_i].
struct ThetaDomain {
  Vector lo, hi;

  Eigen::Index dim() const { return lo.size(); }

  void validate() const {
    detail::check(lo.size() == hi.size(), "ThetaDomain: lo/hi length mismatch");
    detail::check((lo.array() <= hi.array()).all(), "ThetaDomain: lo must be <= hi");
  }

  bool contains(const Vector& v, double tol = 0.0) const {
    return v.size() == lo.size() && (v.array() >= lo.array() - tol).all() &&
           (v.array() <= hi.array() + tol).all();
  }

  Vector clip(const Vector& v) const { return v.cwiseMax(lo).cwiseMin(hi); }

  static ThetaDomain box(Eigen::Index n, double lo, double hi) {
    return ThetaDomain{Vector::Constant(n, lo), Vector::Constant(n, hi)};
  }
};

// ---------------------------------------------------------------------------
// Latent trajectories and observations
// ---------------------------------------------------------------------------

enum class DriftMetric { L2, L1 };

inline const char* to_string(DriftMetric m) { return m == DriftMetric::L2 ? "l2" : "l1"; }

inline double drift_distance(DriftMetric m, const Vector& a, const Vector& b) {
  return m == DriftMetric::L2 ? (a - b).norm() : (a - b).lpNorm<1>();
}

struct DriftEvent {
  int t = 0;  // 1-based period
  std::string description;
};

// The latent sequence {theta_t}, t = 1..T. Entries annotated in drift_events
// are the jump-shock periods; everything else counts as smooth drift.
struct PreferenceTrajectory {
  std::vector<Vector> thetas;
  std::vector<DriftEvent> drift_events;
  DriftMetric metric = DriftMetric::L2;
  int clipped_count = 0;  // coordinate-period clip events during generation

  int T() const { return static_cast<int>(thetas.size()); }
};

struct ObservationRecord {
  Matrix B;
  Vector q;
  Vector x_tilde;
};

// Per-period observed data (B_t, q_t, x_tilde_t). Noisy observations are raw:
// they are not projected back into the feasible set.
struct ObservationSeries {
  std::vector<ObservationRecord> records;
  double noise_sigma2 = 0.0;
  std::optional<PreferenceTrajectory> truth;

  int T() const { return static_cast<int>(records.size()); }

  void validate() const {
    for (const auto& r : records) {
      detail::check(r.q.size() == r.B.rows(), "record: q length vs B rows");
      detail::check(r.x_tilde.size() == r.B.cols(), "record: x_tilde length vs B cols");
      detail::check_finite(r.x_tilde, "x_tilde");
    }
    detail::check(noise_sigma2 >= 0.0, "noise_sigma2 must be >= 0");
    if (truth) {
      detail::check(truth->T() == T(), "truth trajectory length must match records");
    }
  }
};

}  // namespace driftio
