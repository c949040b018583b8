// JSON configuration for scenarios and runs. One self-describing text format
// repo-wide: every shipped preset is also a config file, and validate() never
// executes a run.

#pragma once

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "driftio/presets.hpp"

namespace driftio {

using Json = nlohmann::ordered_json;

namespace cfg {

inline Json vec_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json mat_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Vector vec_from_json(const Json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

inline Matrix mat_from_json(const Json& a) {
  const Eigen::Index rows = static_cast<Eigen::Index>(a.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(a[0].size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = a[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
  return m;
}

}  // namespace cfg

inline Json config_to_json(const RunConfig& c) {
  const ScenarioSpec& s = c.scenario;
  Json j;
  j["name"] = c.name;
  j["agent_labels"] = c.agent_labels;

  Json js;
  js["domain"] = to_string(s.domain);
  js["n"] = s.n;
  js["k"] = s.k;
  js["T"] = s.T;
  js["theta_init"] = cfg::vec_to_json(s.theta_init);
  js["drift_rates"] = cfg::vec_to_json(s.drift_rates);
  Json shocks = Json::array();
  for (const auto& sh : s.theta_shocks)
    shocks.push_back(Json{{"t", sh.t}, {"coordinate", sh.coordinate}, {"multiplier", sh.multiplier}});
  js["theta_shocks"] = shocks;
  Json cshocks = Json::array();
  for (const auto& sh : s.capacity_shocks)
    cshocks.push_back(Json{{"t", sh.t}, {"resource", sh.resource}, {"multiplier", sh.multiplier}});
  js["capacity_shocks"] = cshocks;
  js["sigma2"] = s.sigma2;
  js["seed"] = s.seed;
  js["drift_multiplier"] = s.drift_multiplier;
  js["B"] = cfg::mat_to_json(s.B);
  js["q"] = cfg::vec_to_json(s.q);
  if (s.x_upper) js["x_upper"] = cfg::vec_to_json(*s.x_upper);
  js["cost"] = Json{{"kind", to_string(s.cost.kind)},
                    {"fairness_weight", s.cost.fairness_weight},
                    {"penalty_weight", s.cost.penalty_weight},
                    {"penalty_coeffs", cfg::vec_to_json(s.cost.penalty_coeffs)}};
  js["theta_domain"] = Json{{"lo", cfg::vec_to_json(s.theta_domain.lo)},
                            {"hi", cfg::vec_to_json(s.theta_domain.hi)}};
  js["metric"] = to_string(s.metric);
  js["solver"] = Json{{"tol", s.solver.tol},
                      {"max_iter", s.solver.max_iter},
                      {"tikhonov_rho", s.solver.tikhonov_rho},
                      {"tikhonov_center", cfg::vec_to_json(s.solver.tikhonov_center)}};
  j["scenario"] = js;

  const EstimatorConfig& e = c.estimator;
  Json je;
  je["theta_init"] = cfg::vec_to_json(e.theta_init);
  je["schedule"] = to_string(e.schedule);
  je["eta"] = e.eta;
  je["loss"] = to_string(e.loss);
  je["mirror_map"] = to_string(e.mirror.kind);
  je["normalize_theta"] = e.normalize_theta;
  je["gradient_method"] = e.decision.method == DecisionGradMethod::FiniteDifference
                              ? "finite_difference"
                              : "active_set_analytic";
  je["fd_step"] = e.decision.fd_step;
  j["estimator"] = je;

  j["base_seeds"] = c.base_seeds;
  j["replications"] = c.replications;
  j["baseline_replications"] = c.baseline_replications;
  j["sigma2_levels"] = c.sigma2_levels;
  j["static_prefix_frac"] = c.static_prefix_frac;
  j["fixed_online_eta0_scale"] = c.fixed_online_eta0_scale;
  j["batch_iterations"] = c.batch_iterations;
  return j;
}

namespace cfg {

inline DomainId domain_from_string(const std::string& s) {
  if (s == "healthcare") return DomainId::Healthcare;
  if (s == "energy") return DomainId::Energy;
  if (s == "logistics") return DomainId::Logistics;
  if (s == "finance") return DomainId::Finance;
  return DomainId::Custom;
}

}  // namespace cfg

inline RunConfig config_from_json(const Json& j) {
  RunConfig c;
  c.name = j.at("name").get<std::string>();
  if (j.contains("agent_labels")) c.agent_labels = j.at("agent_labels").get<std::vector<std::string>>();
  const Json& js = j.at("scenario");
  ScenarioSpec& s = c.scenario;
  s.domain = cfg::domain_from_string(js.at("domain").get<std::string>());
  s.n = js.at("n").get<int>();
  s.k = js.at("k").get<int>();
  s.T = js.at("T").get<int>();
  s.theta_init = cfg::vec_from_json(js.at("theta_init"));
  s.drift_rates = cfg::vec_from_json(js.at("drift_rates"));
  for (const auto& sh : js.at("theta_shocks"))
    s.theta_shocks.push_back({sh.at("t").get<int>(), sh.at("coordinate").get<int>(),
                              sh.at("multiplier").get<double>()});
  for (const auto& sh : js.at("capacity_shocks"))
    s.capacity_shocks.push_back({sh.at("t").get<int>(), sh.at("resource").get<int>(),
                                 sh.at("multiplier").get<double>()});
  s.sigma2 = js.at("sigma2").get<double>();
  s.seed = js.at("seed").get<long>();
  s.drift_multiplier = js.at("drift_multiplier").get<double>();
  s.B = cfg::mat_from_json(js.at("B"));
  s.q = cfg::vec_from_json(js.at("q"));
  if (js.contains("x_upper")) s.x_upper = cfg::vec_from_json(js.at("x_upper"));
  const Json& jc = js.at("cost");
  s.cost.kind = jc.at("kind").get<std::string>() == "linear_penalty"
                    ? CostKind::LinearPenalty
                    : CostKind::QuadraticFairness;
  s.cost.fairness_weight = jc.at("fairness_weight").get<double>();
  s.cost.penalty_weight = jc.at("penalty_weight").get<double>();
  s.cost.penalty_coeffs = cfg::vec_from_json(jc.at("penalty_coeffs"));
  s.theta_domain.lo = cfg::vec_from_json(js.at("theta_domain").at("lo"));
  s.theta_domain.hi = cfg::vec_from_json(js.at("theta_domain").at("hi"));
  s.metric = js.at("metric").get<std::string>() == "l1" ? DriftMetric::L1 : DriftMetric::L2;
  const Json& jv = js.at("solver");
  s.solver.tol = jv.at("tol").get<double>();
  s.solver.max_iter = jv.at("max_iter").get<int>();
  s.solver.tikhonov_rho = jv.at("tikhonov_rho").get<double>();
  s.solver.tikhonov_center = cfg::vec_from_json(jv.at("tikhonov_center"));

  const Json& je = j.at("estimator");
  EstimatorConfig& e = c.estimator;
  e.theta_init = cfg::vec_from_json(je.at("theta_init"));
  e.schedule = je.at("schedule").get<std::string>() == "inverse_sqrt" ? StepSchedule::InverseSqrt
                                                                      : StepSchedule::Constant;
  e.eta = je.at("eta").get<double>();
  e.loss = je.at("loss").get<std::string>() == "kkt" ? LossKind::KktLoss : LossKind::DecisionLoss;
  e.mirror.kind = je.at("mirror_map").get<std::string>() == "negative_entropy"
                      ? MirrorMapKind::NegativeEntropy
                      : MirrorMapKind::Euclidean;
  e.mirror.domain = s.theta_domain;
  e.normalize_theta = je.at("normalize_theta").get<bool>();
  e.decision.method = je.at("gradient_method").get<std::string>() == "finite_difference"
                          ? DecisionGradMethod::FiniteDifference
                          : DecisionGradMethod::ActiveSetAnalytic;
  e.decision.fd_step = je.at("fd_step").get<double>();
  e.decision.solver = s.solver;
  e.x_upper = s.x_upper;

  c.base_seeds = j.at("base_seeds").get<std::vector<long>>();
  c.replications = j.at("replications").get<int>();
  c.baseline_replications = j.at("baseline_replications").get<int>();
  c.sigma2_levels = j.at("sigma2_levels").get<std::vector<double>>();
  c.static_prefix_frac = j.at("static_prefix_frac").get<double>();
  c.fixed_online_eta0_scale = j.at("fixed_online_eta0_scale").get<double>();
  c.batch_iterations = j.at("batch_iterations").get<int>();
  return c;
}

// ---------------------------------------------------------------------------
// Validation without execution
// ---------------------------------------------------------------------------

/// Schema and consistency checks; returns human-readable violations, empty
/// when the config is runnable.
inline std::vector<std::string> validate_config_json(const Json& j) {
  std::vector<std::string> out;
  RunConfig c;
  try {
    c = config_from_json(j);
  } catch (const std::exception& e) {
    out.push_back(std::string("parse error: ") + e.what());
    return out;
  }
  const ScenarioSpec& s = c.scenario;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) out.push_back(msg);
  };
  check(s.n >= 1 && s.k >= 1 && s.T >= 1, "n, k, T must be positive");
  check(s.B.rows() == s.k && s.B.cols() == s.n, "B must have shape k x n");
  check(s.q.size() == s.k, "q must have length k");
  check(s.q.size() != s.k || (s.q.array() >= 0.0).all(), "q must be nonnegative");
  check(s.theta_init.size() == s.n, "scenario theta_init must have length n");
  check(s.drift_rates.size() == s.n, "drift_rates must have length n");
  check(s.sigma2 >= 0.0, "sigma2 must be nonnegative");
  check(s.drift_multiplier >= 0.0, "drift_multiplier must be nonnegative");
  check(s.theta_domain.lo.size() == s.n && s.theta_domain.hi.size() == s.n,
        "theta_domain bounds must have length n");
  if (s.theta_domain.lo.size() == s.theta_domain.hi.size() && s.theta_domain.lo.size() == s.n)
    check((s.theta_domain.lo.array() <= s.theta_domain.hi.array()).all(),
          "theta_domain lo must be <= hi");
  for (const auto& sh : s.theta_shocks) {
    if (sh.t < 1 || sh.t > s.T)
      out.push_back("theta shock time out of range [1, T]: t=" + std::to_string(sh.t));
    if (sh.coordinate < 0 || sh.coordinate >= s.n)
      out.push_back("theta shock coordinate out of range: " + std::to_string(sh.coordinate));
    if (sh.multiplier <= 0.0) out.push_back("theta shock multiplier must be > 0");
  }
  for (const auto& sh : s.capacity_shocks) {
    if (sh.t < 1 || sh.t > s.T)
      out.push_back("capacity shock time out of range [1, T]: t=" + std::to_string(sh.t));
    if (sh.resource < 0 || sh.resource >= s.k)
      out.push_back("capacity shock resource out of range: " + std::to_string(sh.resource));
    if (sh.multiplier <= 0.0) out.push_back("capacity shock multiplier must be > 0");
  }
  if (s.cost.kind == CostKind::LinearPenalty) {
    check(s.cost.penalty_coeffs.size() == s.n, "penalty_coeffs must have length n");
    check(s.cost.penalty_coeffs.size() != s.n || (s.cost.penalty_coeffs.array() >= 0.0).all(),
          "penalty_coeffs must be nonnegative");
  }
  check(s.cost.fairness_weight >= 0.0, "fairness_weight must be nonnegative");
  check(s.cost.penalty_weight >= 0.0, "penalty_weight must be nonnegative");
  const EstimatorConfig& e = c.estimator;
  check(e.theta_init.size() == s.n, "estimator theta_init must have length n");
  if (e.theta_init.size() == s.n && s.theta_domain.lo.size() == s.n) {
    for (Eigen::Index i = 0; i < s.n; ++i) {
      if (e.theta_init(i) < s.theta_domain.lo(i) - 1e-12 ||
          e.theta_init(i) > s.theta_domain.hi(i) + 1e-12)
        out.push_back("estimator theta_init coordinate " + std::to_string(i) +
                      " lies outside the theta domain");
    }
  }
  check(e.eta > 0.0, "estimator eta must be positive");
  if (e.mirror.kind == MirrorMapKind::NegativeEntropy && s.theta_domain.lo.size() == s.n)
    check((s.theta_domain.lo.array() > 0.0).all(),
          "negative entropy mirror map requires theta_domain lo > 0");
  check(!c.base_seeds.empty(), "base_seeds must be nonempty");
  check(c.replications >= 1, "replications must be >= 1");
  check(c.static_prefix_frac > 0.0 && c.static_prefix_frac <= 1.0,
        "static_prefix_frac must lie in (0, 1]");
  return out;
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  Json j;
  in >> j;
  return j;
}

inline std::vector<std::string> validate_config_file(const std::string& path) {
  try {
    return validate_config_json(load_json_file(path));
  } catch (const std::exception& e) {
    return {std::string("I/O or parse error: ") + e.what()};
  }
}

/// Accepts a shipped preset name or a path to a config file.
inline RunConfig load_config(const std::string& name_or_path) {
  for (const auto& n : preset_names())
    if (n == name_or_path) return preset_by_name(n);
  return config_from_json(load_json_file(name_or_path));
}

}  // namespace driftio
