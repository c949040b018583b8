// Synthetic world generation: deterministic preference drift with
// multiplicative shocks, capacity shocks on the resource vector, per-period
// forward solutions, and Gaussian observation noise from a counter-based
// generator keyed by (seed, period) so that changing the horizon or the
// estimator configuration never reshuffles the noise.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "driftio/allocation.hpp"
#include "driftio/forward.hpp"

namespace driftio {

// ---------------------------------------------------------------------------
// Counter-based Gaussian noise
// ---------------------------------------------------------------------------

namespace rng {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Uniform in (0, 1), keyed by (seed, period, coordinate, slot).
inline double uniform01(std::uint64_t seed, std::uint64_t t, std::uint64_t coord,
                        std::uint64_t slot) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ (0xa0761d6478bd642full * (t + 1)));
  h = mix64(h ^ (0xe7037ed1a0b428dbull * (coord + 1)));
  h = mix64(h ^ (0x8ebc6af09c88c6e3ull * (slot + 1)));
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two counter-derived uniforms.
inline double gaussian(std::uint64_t seed, std::uint64_t t, std::uint64_t coord) {
  const double u1 = uniform01(seed, t, coord, 0);
  const double u2 = uniform01(seed, t, coord, 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline Vector gaussian_vector(std::uint64_t seed, std::uint64_t t, Eigen::Index n,
                              double sigma) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = sigma * gaussian(seed, t, static_cast<std::uint64_t>(i));
  return v;
}

}  // namespace rng

// ---------------------------------------------------------------------------
// Scenario specification
// ---------------------------------------------------------------------------

enum class DomainId { Healthcare, Energy, Logistics, Finance, Custom };

inline const char* to_string(DomainId d) {
  switch (d) {
    case DomainId::Healthcare: return "healthcare";
    case DomainId::Energy: return "energy";
    case DomainId::Logistics: return "logistics";
    case DomainId::Finance: return "finance";
    case DomainId::Custom: return "custom";
  }
  return "custom";
}

struct ThetaShock {
  int t = 0;           // 1-based period, applied before that period's drift
  int coordinate = 0;  // 0-based
  double multiplier = 1.0;
};

struct CapacityShock {
  int t = 0;          // 1-based period; persists from t onward
  int resource = 0;   // 0-based row of q
  double multiplier = 1.0;
};

struct ScenarioSpec {
  DomainId domain = DomainId::Custom;
  int n = 0, k = 0, T = 0;

  Vector theta_init;   // length p == n
  Vector drift_rates;  // per-period additive drift, length p
  std::vector<ThetaShock> theta_shocks;
  std::vector<CapacityShock> capacity_shocks;
  double sigma2 = 0.0;
  long seed = 42;
  double drift_multiplier = 1.0;

  Matrix B;
  Vector q;
  std::optional<Vector> x_upper;
  CostFamily cost;
  ThetaDomain theta_domain;  // trajectories are clipped into this box
  DriftMetric metric = DriftMetric::L2;
  SolverOptions solver;

  void validate() const {
    detail::check(n >= 1 && k >= 1 && T >= 1, "scenario: n, k, T must be positive");
    detail::check(B.rows() == k && B.cols() == n, "scenario: B must be k x n");
    detail::check(q.size() == k, "scenario: q must have length k");
    detail::check((q.array() >= 0.0).all(), "scenario: q must be >= 0");
    detail::check(theta_init.size() == n, "scenario: theta_init must have length n");
    detail::check(drift_rates.size() == n, "scenario: drift_rates must have length n");
    detail::check(sigma2 >= 0.0, "scenario: sigma2 must be >= 0");
    // Zero is allowed: it switches the smooth drift off, leaving only shocks.
    detail::check(drift_multiplier >= 0.0, "scenario: drift_multiplier must be >= 0");
    theta_domain.validate();
    detail::check(theta_domain.dim() == n, "scenario: theta domain dimension");
    cost.validate(n);
    for (const auto& s : theta_shocks) {
      detail::check(s.t >= 1 && s.t <= T, "theta shock time out of range [1, T]");
      detail::check(s.coordinate >= 0 && s.coordinate < n, "theta shock coordinate");
      detail::check(s.multiplier > 0.0, "theta shock multiplier must be > 0");
    }
    for (const auto& s : capacity_shocks) {
      detail::check(s.t >= 1 && s.t <= T, "capacity shock time out of range [1, T]");
      detail::check(s.resource >= 0 && s.resource < k, "capacity shock resource");
      detail::check(s.multiplier > 0.0, "capacity shock multiplier must be > 0");
    }
  }
};

// ---------------------------------------------------------------------------
// Trajectory generation and variation budget
// ---------------------------------------------------------------------------

/// Deterministic drift path: theta_1 = theta_init, then per period the
/// scheduled multiplicative shocks apply before that period's drift step,
/// and the result is clipped into the estimator domain.
inline PreferenceTrajectory generate_trajectory(const ScenarioSpec& spec) {
  spec.validate();
  PreferenceTrajectory traj;
  traj.metric = spec.metric;
  traj.thetas.reserve(static_cast<size_t>(spec.T));

  auto count_clips = [&](const Vector& raw) {
    int c = 0;
    for (Eigen::Index i = 0; i < raw.size(); ++i)
      if (raw(i) < spec.theta_domain.lo(i) || raw(i) > spec.theta_domain.hi(i)) ++c;
    return c;
  };

  Vector theta = spec.theta_init;
  for (int t = 1; t <= spec.T; ++t) {
    Vector next = theta;
    if (t > 1) next += spec.drift_multiplier * spec.drift_rates;
    bool shocked = false;
    for (const auto& s : spec.theta_shocks) {
      if (s.t == t) {
        // Shock before drift: multiply the carried-over value.
        Vector base = theta;
        base(s.coordinate) *= s.multiplier;
        next = t > 1 ? Vector(base + spec.drift_multiplier * spec.drift_rates) : base;
        shocked = true;
      }
    }
    traj.clipped_count += count_clips(next);
    theta = spec.theta_domain.clip(next);
    traj.thetas.push_back(theta);
    if (shocked) {
      traj.drift_events.push_back({t, "theta shock at t=" + std::to_string(t)});
    }
  }
  return traj;
}

struct VariationBudget {
  double total = 0.0;
  double smooth = 0.0;
  double shock = 0.0;
};

/// V_T = sum_{t>=2} d(theta_t, theta_{t-1}); increments at annotated shock
/// periods form the shock component, the rest is smooth drift.
inline VariationBudget variation_budget(const PreferenceTrajectory& traj) {
  VariationBudget out;
  std::vector<bool> is_shock(static_cast<size_t>(traj.T()) + 1, false);
  for (const auto& e : traj.drift_events)
    if (e.t >= 1 && e.t <= traj.T()) is_shock[static_cast<size_t>(e.t)] = true;
  for (int t = 2; t <= traj.T(); ++t) {
    const double d = drift_distance(traj.metric, traj.thetas[static_cast<size_t>(t - 1)],
                                    traj.thetas[static_cast<size_t>(t - 2)]);
    out.total += d;
    if (is_shock[static_cast<size_t>(t)])
      out.shock += d;
    else
      out.smooth += d;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Observation generation
// ---------------------------------------------------------------------------

/// Capacities at period t: base q with every shock scheduled at or before t
/// applied multiplicatively.
inline Vector capacities_at(const ScenarioSpec& spec, int t) {
  Vector q = spec.q;
  for (const auto& s : spec.capacity_shocks)
    if (s.t <= t) q(s.resource) *= s.multiplier;
  return q;
}

inline AllocationProblem problem_at(const ScenarioSpec& spec, int t, const Vector& theta) {
  AllocationProblem p;
  p.B = spec.B;
  p.q = capacities_at(spec, t);
  p.x_upper = spec.x_upper;
  p.cost = spec.cost;
  p.theta = theta;
  return p;
}

/// Per period: solve the forward problem at the true theta_t and add
/// N(0, sigma^2 I) noise. Observations are recorded raw, without projecting
/// back into the feasible set.
inline ObservationSeries generate_observations(const ScenarioSpec& spec,
                                               const PreferenceTrajectory& traj) {
  spec.validate();
  detail::check(traj.T() == spec.T, "generate_observations: trajectory length");
  ObservationSeries series;
  series.noise_sigma2 = spec.sigma2;
  series.records.reserve(static_cast<size_t>(spec.T));
  const double sigma = std::sqrt(spec.sigma2);

  for (int t = 1; t <= spec.T; ++t) {
    const AllocationProblem p = problem_at(spec, t, traj.thetas[static_cast<size_t>(t - 1)]);
    const ForwardSolution sol = solve_forward(p, spec.solver);
    if (!sol.converged) {
      throw std::runtime_error("generate_observations: forward solve failed at period " +
                               std::to_string(t) + " (residual " +
                               std::to_string(sol.kkt_residual) + ")");
    }
    ObservationRecord rec;
    rec.B = p.B;
    rec.q = p.q;
    rec.x_tilde = sol.x_star;
    if (sigma > 0.0) {
      rec.x_tilde += rng::gaussian_vector(static_cast<std::uint64_t>(spec.seed),
                                          static_cast<std::uint64_t>(t), spec.n, sigma);
    }
    series.records.push_back(std::move(rec));
  }
  series.truth = traj;
  return series;
}

inline ObservationSeries generate_series(const ScenarioSpec& spec) {
  return generate_observations(spec, generate_trajectory(spec));
}

}  // namespace driftio
