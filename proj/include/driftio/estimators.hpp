// Online preference estimators: mirror descent over a hyperrectangle domain
// (projected OGD as the Euclidean special case), the batch inverse estimator,
// and the two reference baselines (static inverse fit on a prefix, and a
// drift-blind online run with a frozen horizon-tuned step).

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftio/allocation.hpp"
#include "driftio/kkt.hpp"

namespace driftio {

// ---------------------------------------------------------------------------
// Mirror maps
// ---------------------------------------------------------------------------

enum class MirrorMapKind { Euclidean, NegativeEntropy };

inline const char* to_string(MirrorMapKind k) {
  return k == MirrorMapKind::Euclidean ? "euclidean" : "negative_entropy";
}

struct MirrorMap {
  MirrorMapKind kind = MirrorMapKind::Euclidean;
  ThetaDomain domain;

  void validate() const {
    domain.validate();
    if (kind == MirrorMapKind::NegativeEntropy) {
      detail::check((domain.lo.array() > 0.0).all(),
                    "negative entropy mirror map requires lo > 0");
    }
  }

  double bregman(const Vector& u, const Vector& v) const {
    if (kind == MirrorMapKind::Euclidean) return 0.5 * (u - v).squaredNorm();
    double d = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      d += u(i) * std::log(u(i) / v(i)) - u(i) + v(i);
    return d;
  }
};

// ---------------------------------------------------------------------------
// Estimator configuration and state
// ---------------------------------------------------------------------------

enum class StepSchedule { Constant, InverseSqrt };
enum class LossKind { KktLoss, DecisionLoss };

inline const char* to_string(StepSchedule s) {
  return s == StepSchedule::Constant ? "constant" : "inverse_sqrt";
}
inline const char* to_string(LossKind l) {
  return l == LossKind::KktLoss ? "kkt" : "decision";
}

struct EstimatorConfig {
  Vector theta_init;
  StepSchedule schedule = StepSchedule::Constant;
  double eta = 0.05;  // constant step, or eta0 for the inverse-sqrt schedule
  LossKind loss = LossKind::DecisionLoss;
  MirrorMap mirror;
  bool normalize_theta = false;  // optional unit-norm convention, off by default
  std::optional<Vector> x_upper;
  DecisionLossOptions decision;

  void validate() const {
    mirror.validate();
    detail::check(theta_init.size() == mirror.domain.dim(), "estimator: theta_init dimension");
    detail::check(mirror.domain.contains(theta_init, 1e-12),
                  "estimator: theta_init must lie in the mirror domain");
    detail::check(eta > 0.0, "estimator: eta must be > 0");
  }
};

struct EstimatorState {
  EstimatorConfig config;
  Vector theta_hat;
  int t = 0;  // completed steps

  struct HistoryEntry {
    int t;
    Vector theta;  // iterate the period-t loss was charged against
    double loss;
  };
  std::vector<HistoryEntry> history;
};

inline EstimatorState make_estimator(const EstimatorConfig& config) {
  config.validate();
  EstimatorState s;
  s.config = config;
  s.theta_hat = config.theta_init;
  return s;
}

// ---------------------------------------------------------------------------
// Per-period loss dispatch
// ---------------------------------------------------------------------------

inline AllocationProblem record_problem(const ObservationRecord& rec, const CostFamily& cost,
                                        const std::optional<Vector>& x_upper,
                                        const Vector& theta) {
  AllocationProblem p;
  p.B = rec.B;
  p.q = rec.q;
  p.x_upper = x_upper;
  p.cost = cost;
  p.theta = theta;
  return p;
}

inline double period_loss(LossKind kind, const Vector& theta, const ObservationRecord& rec,
                          const CostFamily& cost, const std::optional<Vector>& x_upper,
                          const DecisionLossOptions& dopt) {
  if (kind == LossKind::KktLoss) return kkt_loss(theta, rec.B, rec.q, rec.x_tilde, cost).total;
  return decision_loss(theta, record_problem(rec, cost, x_upper, theta), rec.x_tilde, dopt);
}

inline Vector period_loss_subgradient(LossKind kind, const Vector& theta,
                                      const ObservationRecord& rec, const CostFamily& cost,
                                      const std::optional<Vector>& x_upper,
                                      const DecisionLossOptions& dopt) {
  if (kind == LossKind::KktLoss)
    return kkt_loss_subgradient(theta, rec.B, rec.q, rec.x_tilde, cost);
  return decision_loss_subgradient(theta, record_problem(rec, cost, x_upper, theta),
                                   rec.x_tilde, dopt);
}

// Loss and subgradient from one evaluation; the online and batch loops sit
// on this to avoid re-solving the forward problem per period.
struct PeriodEval {
  double loss = 0.0;
  Vector subgradient;
};

inline PeriodEval period_eval(LossKind kind, const Vector& theta, const ObservationRecord& rec,
                              const CostFamily& cost, const std::optional<Vector>& x_upper,
                              const DecisionLossOptions& dopt) {
  PeriodEval out;
  if (kind == LossKind::KktLoss) {
    const KktEval ev = kkt_loss_eval(theta, rec.B, rec.q, rec.x_tilde, cost);
    out.loss = ev.breakdown.total;
    out.subgradient = ev.subgradient;
    return out;
  }
  const DecisionEval ev =
      decision_loss_eval(theta, record_problem(rec, cost, x_upper, theta), rec.x_tilde, dopt);
  out.loss = ev.loss;
  out.subgradient = ev.subgradient;
  return out;
}

// ---------------------------------------------------------------------------
// Mirror descent step and the online loop
// ---------------------------------------------------------------------------

// One predict-then-update step. The loss is charged against the incoming
// iterate (the regret summand), then the iterate moves:
//   Euclidean map        -> coordinate-wise clipped gradient step, which is
//                           the exact Bregman projection onto a box;
//   negative entropy map -> multiplicative update, then clip.
inline EstimatorState md_step(EstimatorState state, const ObservationRecord& rec,
                              const CostFamily& cost) {
  const int period = state.t + 1;
  const EstimatorConfig& cfg = state.config;

  PeriodEval ev;
  try {
    ev = period_eval(cfg.loss, state.theta_hat, rec, cost, cfg.x_upper, cfg.decision);
  } catch (const std::exception& e) {
    throw std::runtime_error("md_step failed at period " + std::to_string(period) + ": " +
                             e.what());
  }
  const double loss = ev.loss;
  const Vector& g = ev.subgradient;

  const double eta_t = cfg.schedule == StepSchedule::Constant
                           ? cfg.eta
                           : cfg.eta / std::sqrt(static_cast<double>(period));

  state.history.push_back({period, state.theta_hat, loss});

  Vector next;
  if (cfg.mirror.kind == MirrorMapKind::Euclidean) {
    next = cfg.mirror.domain.clip(state.theta_hat - eta_t * g);
  } else {
    next = state.theta_hat.cwiseProduct((-eta_t * g.array()).exp().matrix());
    next = cfg.mirror.domain.clip(next);
  }
  if (cfg.normalize_theta) {
    const double nrm = next.norm();
    if (nrm > 1e-12) next /= nrm;
    next = cfg.mirror.domain.clip(next);
  }
  detail::check(cfg.mirror.domain.contains(next, 1e-12), "md_step: iterate left the domain");

  state.theta_hat = next;
  state.t = period;
  return state;
}

struct OnlineRunResult {
  std::vector<Vector> thetas;  // theta_hat_t before seeing period t's loss
  std::vector<double> losses;  // loss_t(theta_hat_t), the regret summand
};

inline OnlineRunResult run_online(const ObservationSeries& series, const CostFamily& cost,
                                  const EstimatorConfig& config) {
  detail::check(!series.records.empty(), "run_online: empty series");
  EstimatorState state = make_estimator(config);
  OnlineRunResult out;
  out.thetas.reserve(series.records.size());
  out.losses.reserve(series.records.size());
  for (const auto& rec : series.records) {
    out.thetas.push_back(state.theta_hat);
    state = md_step(std::move(state), rec, cost);
    out.losses.push_back(state.history.back().loss);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batch estimator
// ---------------------------------------------------------------------------

struct BatchOptions {
  int iterations = 5000;
  double eta0 = 0.0;            // 0 => curvature heuristic per loss/family
  std::optional<Vector> start;  // default: domain midpoint
  std::optional<Vector> x_upper;
  DecisionLossOptions decision;
};

struct BatchResult {
  Vector theta;
  double objective = 0.0;  // sum over periods at the returned iterate
  int iterations = 0;
};

namespace detail {

inline double batch_default_eta0(LossKind loss, const CostFamily& cost,
                                 const DecisionLossOptions& dopt) {
  if (loss == LossKind::KktLoss) {
    // Dual-term curvature is 2 ||A||^2 (A = -2I or I).
    return cost.kind == CostKind::QuadraticFairness ? 0.125 : 0.5;
  }
  if (cost.kind == CostKind::QuadraticFairness) return 0.25 / (1.0 + cost.fairness_weight);
  const double rho = dopt.solver.tikhonov_rho;
  return std::max(rho * rho, 1e-6);
}

}  // namespace detail

/// Projected subgradient minimization of the summed loss over the domain,
/// inverse-sqrt schedule, returning the best-objective iterate seen.
inline BatchResult batch_estimate(const ObservationSeries& series, const CostFamily& cost,
                                  LossKind loss, const ThetaDomain& domain,
                                  const BatchOptions& opt = {}) {
  detail::check(!series.records.empty(), "batch_estimate: empty series");
  domain.validate();
  const double T = static_cast<double>(series.records.size());
  const double eta0 =
      opt.eta0 > 0.0 ? opt.eta0 : detail::batch_default_eta0(loss, cost, opt.decision);

  Vector theta = opt.start ? domain.clip(*opt.start) : Vector(0.5 * (domain.lo + domain.hi));

  auto mean_loss_and_grad = [&](const Vector& th, Vector& grad_out) {
    double acc = 0.0;
    grad_out = Vector::Zero(domain.dim());
    for (const auto& rec : series.records) {
      const PeriodEval ev = period_eval(loss, th, rec, cost, opt.x_upper, opt.decision);
      acc += ev.loss;
      grad_out += ev.subgradient;
    }
    grad_out /= T;
    return acc / T;
  };

  BatchResult best;
  best.theta = theta;
  Vector grad(domain.dim());
  double obj = mean_loss_and_grad(theta, grad);
  best.objective = obj * T;

  for (int it = 1; it <= opt.iterations; ++it) {
    const double eta = eta0 / std::sqrt(static_cast<double>(it));
    theta = domain.clip(theta - eta * grad);
    obj = mean_loss_and_grad(theta, grad);
    if (obj * T < best.objective) {
      best.objective = obj * T;
      best.theta = theta;
    }
  }
  best.iterations = opt.iterations;
  return best;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// Drift-blind online baseline: the same mirror-descent loop with the step
/// frozen to eta0 / sqrt(T) for the whole run (horizon-tuned once, no
/// adaptation after shocks). eta0 = eta0_scale * the drift-aware step.
inline OnlineRunResult baseline_fixed_online(const ObservationSeries& series,
                                             const CostFamily& cost,
                                             const EstimatorConfig& config,
                                             double eta0_scale = 6.0) {
  EstimatorConfig frozen = config;
  frozen.schedule = StepSchedule::Constant;
  frozen.eta = eta0_scale * config.eta / std::sqrt(static_cast<double>(series.records.size()));
  return run_online(series, cost, frozen);
}

/// Static inverse-optimization baseline: batch-fit once on the leading
/// prefix of the series, hold the fit fixed afterwards. Before the fit
/// window closes the baseline still reports its initial iterate.
inline OnlineRunResult baseline_static(const ObservationSeries& series, const CostFamily& cost,
                                       const EstimatorConfig& config, double prefix_frac = 0.1,
                                       BatchOptions batch = {}) {
  detail::check(!series.records.empty(), "baseline_static: empty series");
  detail::check(prefix_frac > 0.0 && prefix_frac <= 1.0, "baseline_static: prefix fraction");
  const int T = static_cast<int>(series.records.size());
  const int prefix = std::max(1, static_cast<int>(std::floor(prefix_frac * T)));

  ObservationSeries head;
  head.noise_sigma2 = series.noise_sigma2;
  head.records.assign(series.records.begin(), series.records.begin() + prefix);
  batch.decision = config.decision;
  batch.x_upper = config.x_upper;
  const BatchResult fit = batch_estimate(head, cost, config.loss, config.mirror.domain, batch);

  OnlineRunResult out;
  out.thetas.reserve(series.records.size());
  out.losses.reserve(series.records.size());
  for (int t = 1; t <= T; ++t) {
    const Vector& th = t <= prefix ? config.theta_init : fit.theta;
    out.thetas.push_back(th);
    out.losses.push_back(period_loss(config.loss, th, series.records[static_cast<size_t>(t - 1)],
                                     cost, config.x_upper, config.decision));
  }
  return out;
}

}  // namespace driftio
