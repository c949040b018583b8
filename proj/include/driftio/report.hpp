// Assembles a RunReport for one (estimator, seed, noise, drift) cell and
// serializes it. Report JSON and all CSV output print floats with 9
// significant digits through one formatter so repeated runs are
// byte-identical.

#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "driftio/config.hpp"
#include "driftio/diagnostics.hpp"
#include "driftio/presets.hpp"
#include "driftio/scenario.hpp"

namespace driftio {

enum class EstimatorKind { DriftAware, StaticIO, FixedOnline };

inline const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::DriftAware: return "drift-aware";
    case EstimatorKind::StaticIO: return "static";
    case EstimatorKind::FixedOnline: return "fixed-online";
  }
  return "drift-aware";
}

inline EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "drift-aware") return EstimatorKind::DriftAware;
  if (s == "static") return EstimatorKind::StaticIO;
  if (s == "fixed-online") return EstimatorKind::FixedOnline;
  throw std::invalid_argument("unknown estimator: " + s +
                              " (expected drift-aware, static, or fixed-online)");
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

inline std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::string fmt9(const Vector& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt9(v(i));
  }
  return s + "]";
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cell execution
// ---------------------------------------------------------------------------

struct CellSpec {
  EstimatorKind estimator = EstimatorKind::DriftAware;
  long seed = 42;
  double sigma2 = 0.01;
  double drift_multiplier = 1.0;
  LossKind loss = LossKind::DecisionLoss;
};

/// Generate the scenario, run the requested estimator, and compute every
/// diagnostic of the report, including the hindsight comparator.
inline RunReport run_cell(const RunConfig& cfg, const CellSpec& cell) {
  ScenarioSpec scen = cfg.scenario;
  scen.seed = cell.seed;
  scen.sigma2 = cell.sigma2;
  scen.drift_multiplier = cell.drift_multiplier;

  EstimatorConfig est = cfg.estimator;
  est.loss = cell.loss;

  const PreferenceTrajectory traj = generate_trajectory(scen);
  const ObservationSeries series = generate_observations(scen, traj);

  OnlineRunResult run;
  switch (cell.estimator) {
    case EstimatorKind::DriftAware:
      run = run_online(series, scen.cost, est);
      break;
    case EstimatorKind::FixedOnline:
      run = baseline_fixed_online(series, scen.cost, est, cfg.fixed_online_eta0_scale);
      break;
    case EstimatorKind::StaticIO: {
      BatchOptions batch;
      batch.iterations = cfg.batch_iterations;
      run = baseline_static(series, scen.cost, est, cfg.static_prefix_frac, batch);
      break;
    }
  }

  std::vector<double> losses_at_truth;
  losses_at_truth.reserve(series.records.size());
  for (size_t t = 0; t < series.records.size(); ++t) {
    losses_at_truth.push_back(period_loss(est.loss, traj.thetas[t], series.records[t], scen.cost,
                                          est.x_upper, est.decision));
  }

  BatchOptions comparator;
  comparator.iterations = cfg.batch_iterations;
  comparator.decision = est.decision;
  comparator.x_upper = est.x_upper;
  const StaticRegretResult stat =
      static_regret(run.losses, series, scen.cost, est.loss, scen.theta_domain, comparator);
  const RegretSeries dyn = dynamic_regret(run.losses, losses_at_truth);
  const VariationBudget vb = variation_budget(traj);

  RunReport rep;
  rep.domain = cfg.name;
  rep.estimator = to_string(cell.estimator);
  rep.seed = cell.seed;
  rep.sigma2 = cell.sigma2;
  rep.drift_multiplier = cell.drift_multiplier;
  rep.loss = est.loss;
  rep.theta_star = stat.theta_star;
  rep.comparator_objective = stat.comparator_objective;
  rep.trajectory_clipped_count = traj.clipped_count;

  const int T = static_cast<int>(series.records.size());
  rep.per_t.reserve(static_cast<size_t>(T));
  for (int t = 1; t <= T; ++t) {
    RunReport::PerPeriod row;
    row.t = t;
    row.recovery_error =
        (run.thetas[static_cast<size_t>(t - 1)] - traj.thetas[static_cast<size_t>(t - 1)]).norm();
    row.loss_at_estimate = run.losses[static_cast<size_t>(t - 1)];
    row.loss_at_truth = losses_at_truth[static_cast<size_t>(t - 1)];
    row.loss_at_static_star = stat.losses_at_star[static_cast<size_t>(t - 1)];
    rep.per_t.push_back(row);
  }

  rep.summary.final_error = rep.per_t.back().recovery_error;
  rep.summary.cum_static_regret = stat.regret.terminal();
  rep.summary.cum_dynamic_regret = dyn.terminal();
  rep.summary.static_slope = loglog_slope(stat.regret.cumulative).slope;
  rep.summary.dynamic_slope = loglog_slope(dyn.cumulative).slope;
  rep.summary.v_total = vb.total;
  rep.summary.v_smooth = vb.smooth;
  rep.summary.v_shock = vb.shock;
  if (cell.sigma2 > 0.0) {
    const size_t t0 = (rep.per_t.size() * 3) / 4;
    double acc = 0.0;
    for (size_t t = t0; t < rep.per_t.size(); ++t) {
      acc += rep.per_t[t].recovery_error * std::sqrt(static_cast<double>(t + 1)) /
             std::sqrt(cell.sigma2);
    }
    rep.summary.c_hat = acc / static_cast<double>(rep.per_t.size() - t0);
  }

  // Decision registry: every convention a reader needs to interpret the run.
  auto meta = [&](const std::string& k, const std::string& v) { rep.metadata.emplace_back(k, v); };
  meta("true_theta_init", fmt9(scen.theta_init));
  meta("estimator_theta_init", fmt9(est.theta_init));
  meta("eta", fmt9(est.eta));
  meta("schedule", to_string(est.schedule));
  meta("mirror_map", to_string(est.mirror.kind));
  meta("tikhonov_rho", fmt9(scen.solver.tikhonov_rho));
  meta("tikhonov_center", scen.solver.tikhonov_center.size()
                              ? fmt9(scen.solver.tikhonov_center)
                              : std::string("origin"));
  meta("pinv_sv_cutoff_rel", "1e-10");
  meta("rank_sv_cutoff_rel", "1e-8");
  meta("complementarity_lambda", "dual-gap argmin reused");
  meta("shock_ordering", "shock before same-period drift");
  meta("capacity_shock_persistence", "from shock period onward");
  meta("observation_projection", "none (raw noisy observations)");
  meta("noise_generator", "counter-based splitmix64 + box-muller keyed (seed, t, coord)");
  meta("static_prefix_frac", fmt9(cfg.static_prefix_frac));
  meta("fixed_online_eta0_scale", fmt9(cfg.fixed_online_eta0_scale));
  meta("batch_iterations", std::to_string(cfg.batch_iterations));
  meta("c_hat_window", "final quarter of horizon");
  meta("trajectory_clipped_count", std::to_string(traj.clipped_count));
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline std::string report_to_json(const RunReport& r) {
  std::ostringstream o;
  o << "{\n";
  o << "  \"domain\": \"" << json_escape(r.domain) << "\",\n";
  o << "  \"estimator\": \"" << r.estimator << "\",\n";
  o << "  \"seed\": " << r.seed << ",\n";
  o << "  \"sigma2\": " << fmt9(r.sigma2) << ",\n";
  o << "  \"drift_multiplier\": " << fmt9(r.drift_multiplier) << ",\n";
  o << "  \"loss\": \"" << to_string(r.loss) << "\",\n";
  o << "  \"summary\": {\n";
  o << "    \"final_error\": " << fmt9(r.summary.final_error) << ",\n";
  o << "    \"cum_static_regret\": " << fmt9(r.summary.cum_static_regret) << ",\n";
  o << "    \"cum_dynamic_regret\": " << fmt9(r.summary.cum_dynamic_regret) << ",\n";
  o << "    \"static_slope\": " << fmt9(r.summary.static_slope) << ",\n";
  o << "    \"dynamic_slope\": " << fmt9(r.summary.dynamic_slope) << ",\n";
  o << "    \"v_total\": " << fmt9(r.summary.v_total) << ",\n";
  o << "    \"v_smooth\": " << fmt9(r.summary.v_smooth) << ",\n";
  o << "    \"v_shock\": " << fmt9(r.summary.v_shock) << ",\n";
  o << "    \"c_hat\": " << (r.summary.c_hat ? fmt9(*r.summary.c_hat) : "null") << "\n";
  o << "  },\n";
  o << "  \"comparator\": {\"theta_star\": " << fmt9(r.theta_star)
    << ", \"objective\": " << fmt9(r.comparator_objective) << "},\n";
  o << "  \"metadata\": {\n";
  for (size_t i = 0; i < r.metadata.size(); ++i) {
    o << "    \"" << json_escape(r.metadata[i].first) << "\": \""
      << json_escape(r.metadata[i].second) << "\"" << (i + 1 < r.metadata.size() ? "," : "")
      << "\n";
  }
  o << "  },\n";
  o << "  \"per_t\": [\n";
  for (size_t i = 0; i < r.per_t.size(); ++i) {
    const auto& p = r.per_t[i];
    o << "    {\"t\": " << p.t << ", \"recovery_error\": " << fmt9(p.recovery_error)
      << ", \"loss_at_estimate\": " << fmt9(p.loss_at_estimate)
      << ", \"loss_at_truth\": " << fmt9(p.loss_at_truth)
      << ", \"loss_at_static_star\": " << fmt9(p.loss_at_static_star) << "}"
      << (i + 1 < r.per_t.size() ? "," : "") << "\n";
  }
  o << "  ]\n";
  o << "}\n";
  return o.str();
}

inline RunReport report_from_json(const Json& j) {
  RunReport r;
  r.domain = j.at("domain").get<std::string>();
  r.estimator = j.at("estimator").get<std::string>();
  r.seed = j.at("seed").get<long>();
  r.sigma2 = j.at("sigma2").get<double>();
  r.drift_multiplier = j.at("drift_multiplier").get<double>();
  r.loss = j.at("loss").get<std::string>() == "kkt" ? LossKind::KktLoss : LossKind::DecisionLoss;
  const Json& s = j.at("summary");
  r.summary.final_error = s.at("final_error").get<double>();
  r.summary.cum_static_regret = s.at("cum_static_regret").get<double>();
  r.summary.cum_dynamic_regret = s.at("cum_dynamic_regret").get<double>();
  r.summary.static_slope = s.at("static_slope").get<double>();
  r.summary.dynamic_slope = s.at("dynamic_slope").get<double>();
  r.summary.v_total = s.at("v_total").get<double>();
  r.summary.v_smooth = s.at("v_smooth").get<double>();
  r.summary.v_shock = s.at("v_shock").get<double>();
  if (!s.at("c_hat").is_null()) r.summary.c_hat = s.at("c_hat").get<double>();
  r.theta_star = cfg::vec_from_json(j.at("comparator").at("theta_star"));
  r.comparator_objective = j.at("comparator").at("objective").get<double>();
  for (const auto& [k, v] : j.at("metadata").items()) r.metadata.emplace_back(k, v.get<std::string>());
  for (const auto& p : j.at("per_t")) {
    RunReport::PerPeriod row;
    row.t = p.at("t").get<int>();
    row.recovery_error = p.at("recovery_error").get<double>();
    row.loss_at_estimate = p.at("loss_at_estimate").get<double>();
    row.loss_at_truth = p.at("loss_at_truth").get<double>();
    row.loss_at_static_star = p.at("loss_at_static_star").get<double>();
    r.per_t.push_back(row);
  }
  return r;
}

inline RunReport load_report(const std::string& path) {
  return report_from_json(load_json_file(path));
}

}  // namespace driftio
