// Evaluation quantities: static and dynamic regret series, log-log slope
// fits of cumulative curves, and the noise-collapse rescaling with its
// constant estimate.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "driftio/allocation.hpp"
#include "driftio/estimators.hpp"

namespace driftio {

struct RegretSeries {
  std::vector<double> per_period;
  std::vector<double> cumulative;

  double terminal() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

inline RegretSeries regret_from_differences(const std::vector<double>& losses_at_estimate,
                                            const std::vector<double>& losses_at_benchmark) {
  detail::check(losses_at_estimate.size() == losses_at_benchmark.size(),
                "regret: series length mismatch");
  RegretSeries r;
  r.per_period.reserve(losses_at_estimate.size());
  r.cumulative.reserve(losses_at_estimate.size());
  double acc = 0.0;
  for (size_t t = 0; t < losses_at_estimate.size(); ++t) {
    const double d = losses_at_estimate[t] - losses_at_benchmark[t];
    r.per_period.push_back(d);
    acc += d;
    r.cumulative.push_back(acc);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Static regret against the best fixed parameter in hindsight
// ---------------------------------------------------------------------------

struct StaticRegretResult {
  Vector theta_star;            // hindsight comparator
  double comparator_objective;  // summed loss of theta_star
  std::vector<double> losses_at_star;
  RegretSeries regret;
};

/// Comparator solved by the batch estimator on the full series; per-period
/// summand is loss(estimate) - loss(theta_star). Negative summands before
/// the comparator's optimum is approached are kept, not clipped.
inline StaticRegretResult static_regret(const std::vector<double>& losses_at_estimate,
                                        const ObservationSeries& series, const CostFamily& cost,
                                        LossKind loss, const ThetaDomain& domain,
                                        const BatchOptions& batch = {}) {
  detail::check(losses_at_estimate.size() == series.records.size(),
                "static_regret: losses length vs series");
  StaticRegretResult out;
  const BatchResult fit = batch_estimate(series, cost, loss, domain, batch);
  out.theta_star = fit.theta;
  out.comparator_objective = fit.objective;
  out.losses_at_star.reserve(series.records.size());
  for (const auto& rec : series.records) {
    out.losses_at_star.push_back(
        period_loss(loss, fit.theta, rec, cost, batch.x_upper, batch.decision));
  }
  out.regret = regret_from_differences(losses_at_estimate, out.losses_at_star);
  return out;
}

/// Cumulative loss difference against the true time-varying sequence.
inline RegretSeries dynamic_regret(const std::vector<double>& losses_at_estimate,
                                   const std::vector<double>& losses_at_truth) {
  return regret_from_differences(losses_at_estimate, losses_at_truth);
}

// ---------------------------------------------------------------------------
// Log-log slope of a cumulative curve
// ---------------------------------------------------------------------------

struct SlopeFit {
  double slope = 0.0;
  double shift = 0.0;  // applied to keep the series positive, recorded
  int points = 0;
};

/// OLS slope of log(value) against log(t) over the trailing window
/// [lo_frac * T, T]. Nonpositive values shift the whole windowed series up
/// by -min + 1e-12 before taking logs; the shift is reported.
inline SlopeFit loglog_slope(const std::vector<double>& cumulative, double lo_frac = 0.25) {
  detail::check(!cumulative.empty(), "loglog_slope: empty series");
  detail::check(lo_frac >= 0.0 && lo_frac < 1.0, "loglog_slope: window fraction");
  const int T = static_cast<int>(cumulative.size());
  const int t0 = std::max(1, static_cast<int>(std::ceil(lo_frac * T)));
  detail::check(t0 <= T, "loglog_slope: empty window");

  double min_val = std::numeric_limits<double>::infinity();
  for (int t = t0; t <= T; ++t) min_val = std::min(min_val, cumulative[static_cast<size_t>(t - 1)]);
  SlopeFit fit;
  fit.shift = min_val <= 0.0 ? -min_val + 1e-12 : 0.0;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int t = t0; t <= T; ++t) {
    const double x = std::log(static_cast<double>(t));
    const double y = std::log(cumulative[static_cast<size_t>(t - 1)] + fit.shift);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  detail::check(m >= 2, "loglog_slope: window needs at least two points");
  fit.points = m;
  const double denom = m * sxx - sx * sx;
  fit.slope = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Noise collapse
// ---------------------------------------------------------------------------

struct NoiseCollapse {
  struct Level {
    double sigma2 = 0.0;
    std::vector<double> rescaled;  // err_t * sqrt(t) / sqrt(sigma2)
    double c_hat = 0.0;            // mean of the rescaled series, final quarter
  };
  std::vector<Level> levels;
  std::vector<double> excluded_sigma2;  // zero-noise levels cannot be rescaled
  double c_hat = 0.0;                   // mean over levels
  double spread = 0.0;                  // (max - min) / mean of level constants
};

/// Rescales each (median) error series by sqrt(t)/sqrt(sigma^2) and compares
/// the per-level constants extracted over the final quarter of the horizon.
inline NoiseCollapse noise_collapse(const std::vector<std::vector<double>>& error_series,
                                    const std::vector<double>& sigma2_list) {
  detail::check(error_series.size() == sigma2_list.size(),
                "noise_collapse: series/sigma2 count mismatch");
  NoiseCollapse out;
  for (size_t level = 0; level < sigma2_list.size(); ++level) {
    const double s2 = sigma2_list[level];
    if (s2 <= 0.0) {
      out.excluded_sigma2.push_back(s2);
      continue;
    }
    NoiseCollapse::Level lev;
    lev.sigma2 = s2;
    const auto& err = error_series[level];
    detail::check(!err.empty(), "noise_collapse: empty error series");
    lev.rescaled.reserve(err.size());
    for (size_t t = 0; t < err.size(); ++t)
      lev.rescaled.push_back(err[t] * std::sqrt(static_cast<double>(t + 1)) / std::sqrt(s2));
    const size_t t0 = (err.size() * 3) / 4;
    double acc = 0.0;
    for (size_t t = t0; t < err.size(); ++t) acc += lev.rescaled[t];
    lev.c_hat = acc / static_cast<double>(err.size() - t0);
    out.levels.push_back(std::move(lev));
  }
  detail::check(!out.levels.empty(), "noise_collapse: no positive-noise levels");
  double cmin = std::numeric_limits<double>::infinity();
  double cmax = -std::numeric_limits<double>::infinity();
  double csum = 0.0;
  for (const auto& lev : out.levels) {
    cmin = std::min(cmin, lev.c_hat);
    cmax = std::max(cmax, lev.c_hat);
    csum += lev.c_hat;
  }
  out.c_hat = csum / static_cast<double>(out.levels.size());
  out.spread = out.c_hat != 0.0 ? (cmax - cmin) / out.c_hat : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Per-run report
// ---------------------------------------------------------------------------

struct RunReport {
  struct PerPeriod {
    int t = 0;
    double recovery_error = 0.0;  // ||theta_hat_t - theta_t||_2
    double loss_at_estimate = 0.0;
    double loss_at_truth = 0.0;
    double loss_at_static_star = 0.0;
  };

  struct Summary {
    double final_error = 0.0;
    double cum_static_regret = 0.0;
    double cum_dynamic_regret = 0.0;
    double static_slope = 0.0;
    double dynamic_slope = 0.0;
    double v_total = 0.0, v_smooth = 0.0, v_shock = 0.0;
    std::optional<double> c_hat;  // absent for noiseless runs
  };

  std::string domain;
  std::string estimator;
  long seed = 0;
  double sigma2 = 0.0;
  double drift_multiplier = 1.0;
  LossKind loss = LossKind::DecisionLoss;

  std::vector<PerPeriod> per_t;
  Summary summary;

  Vector theta_star;  // static comparator
  double comparator_objective = 0.0;
  int trajectory_clipped_count = 0;

  // Resolved conventions echoed so results are self-describing.
  std::vector<std::pair<std::string, std::string>> metadata;
};

}  // namespace driftio
