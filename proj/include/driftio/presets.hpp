// The four shipped domain presets. System sizes, horizons, capacities,
// estimator domains, step sizes, initial estimates, drift schedules, and
// shock events follow the published experiment tables; consumption matrices,
// cost weights, initial true preferences, and the dispatch anchors of the
// linear-cost domains are configuration values recorded in every run report.

#pragma once

#include <string>
#include <vector>

#include "driftio/estimators.hpp"
#include "driftio/scenario.hpp"

namespace driftio {

struct RunConfig {
  std::string name;
  ScenarioSpec scenario;
  EstimatorConfig estimator;  // drift-aware defaults
  std::vector<std::string> agent_labels;  // length n, for figure data

  std::vector<long> base_seeds{42, 77, 123};
  int replications = 20;
  int baseline_replications = 30;
  std::vector<double> sigma2_levels{0.01, 0.05, 0.1};

  double static_prefix_frac = 0.1;
  double fixed_online_eta0_scale = 6.0;
  int batch_iterations = 5000;

  void validate() const {
    scenario.validate();
    estimator.validate();
    detail::check(!base_seeds.empty(), "config: base_seeds must be nonempty");
    detail::check(replications >= 1, "config: replications must be >= 1");
    detail::check(static_prefix_frac > 0.0 && static_prefix_frac <= 1.0,
                  "config: static_prefix_frac in (0, 1]");
    detail::check(scenario.theta_domain.contains(estimator.theta_init, 1e-12),
                  "config: initial estimate must lie in the estimator domain");
  }
};

// Deterministic seed extension: the base seeds first, then base * 1000 +
// replica round, covering any replication count.
inline std::vector<long> extend_seeds(const std::vector<long>& base, int count) {
  std::vector<long> out;
  out.reserve(static_cast<size_t>(count));
  for (int r = 0; r < count; ++r) {
    const long b = base[static_cast<size_t>(r) % base.size()];
    const long round = r / static_cast<int>(base.size());
    out.push_back(round == 0 ? b : b * 1000 + round);
  }
  return out;
}

namespace presets {

inline RunConfig healthcare() {
  RunConfig c;
  c.name = "healthcare";
  c.agent_labels = {"critical", "serious", "mild", "elderly", "general"};
  ScenarioSpec& s = c.scenario;
  s.domain = DomainId::Healthcare;
  s.n = 5;  // Critical, Serious, Mild, Elderly, General
  s.k = 2;  // ICU beds, general beds
  s.T = 200;
  s.B = Matrix(2, 5);
  s.B << 10.0, 4.0, 0.5, 11.0, 0.5,  // ICU load per allocation unit
      1.0, 1.0, 1.0, 1.0, 1.0;       // general beds
  s.q = Vector(2);
  s.q << 50.0, 200.0;
  s.cost.kind = CostKind::QuadraticFairness;
  s.cost.fairness_weight = 0.3;
  s.theta_init = Vector(5);
  s.theta_init << 2.5, 2.0, 1.0, 1.5, 1.0;
  s.drift_rates = Vector::Zero(5);
  s.drift_rates(3) = 0.005;  // elderly priority rises
  s.capacity_shocks.push_back({100, 0, 2.0});  // ICU surge response at t=100
  s.sigma2 = 0.01;
  s.theta_domain = ThetaDomain::box(5, 0.0, 5.0);

  EstimatorConfig& e = c.estimator;
  e.mirror.kind = MirrorMapKind::Euclidean;
  e.mirror.domain = s.theta_domain;
  e.theta_init = Vector::Zero(5);
  e.eta = 0.05;
  e.loss = LossKind::DecisionLoss;
  e.decision.method = DecisionGradMethod::ActiveSetAnalytic;
  e.decision.solver = s.solver;
  return c;
}

inline RunConfig energy() {
  RunConfig c;
  c.name = "energy";
  c.agent_labels = {"coal", "gas", "wind", "solar"};
  ScenarioSpec& s = c.scenario;
  s.domain = DomainId::Energy;
  s.n = 4;  // Coal, Gas, Wind, Solar
  s.k = 1;
  s.T = 300;
  s.B = Matrix::Ones(1, 4);
  s.q = Vector::Constant(1, 100.0);
  s.cost.kind = CostKind::LinearPenalty;
  s.cost.penalty_weight = 0.25;
  s.cost.penalty_coeffs = Vector(4);
  s.cost.penalty_coeffs << 1.0, 0.6, 0.05, 0.0;  // emission intensities
  s.theta_init = Vector(4);
  s.theta_init << 1.6, 0.8, 0.2, 0.1;
  s.drift_rates = Vector(4);
  s.drift_rates << -0.01, 0.0, 0.01, 0.01;  // coal down, renewables up
  s.theta_shocks.push_back({150, 1, 1.5});  // gas price shock
  s.sigma2 = 0.01;
  s.theta_domain = ThetaDomain::box(4, 0.0, 2.0);
  // Linear dispatch needs curvature to be invertible from allocations:
  // nominal dispatch anchor with a rho sized for the published step.
  s.solver.tikhonov_rho = 0.15;
  s.solver.tikhonov_center = Vector(4);
  s.solver.tikhonov_center << 30.0, 25.0, 25.0, 20.0;

  EstimatorConfig& e = c.estimator;
  e.mirror.kind = MirrorMapKind::Euclidean;
  e.mirror.domain = s.theta_domain;
  e.theta_init = Vector::Ones(4);
  e.eta = 0.02;
  e.loss = LossKind::DecisionLoss;
  e.decision.method = DecisionGradMethod::ActiveSetAnalytic;
  e.decision.solver = s.solver;
  return c;
}

inline RunConfig logistics() {
  RunConfig c;
  c.name = "logistics";
  c.agent_labels = {"short_haul", "long_haul", "perishable", "express", "bulk", "general"};
  ScenarioSpec& s = c.scenario;
  s.domain = DomainId::Logistics;
  s.n = 6;  // ShortHaul, LongHaul, Perishable, Express, Bulk, General
  s.k = 3;  // fleet, drivers, depot space
  s.T = 250;
  s.B = Matrix(3, 6);
  s.B << 28.5, 33.25, 23.75, 19.0, 14.25, 9.5,  // fleet usage
      8.0, 10.0, 6.0, 7.0, 5.0, 4.0,            // drivers
      5.0, 5.0, 8.0, 5.0, 6.0, 5.0;             // depot space
  s.q = Vector(3);
  s.q << 300.0, 240.0, 260.0;
  s.cost.kind = CostKind::QuadraticFairness;
  s.cost.fairness_weight = 0.2;
  s.theta_init = Vector(6);
  s.theta_init << 3.0, 2.5, 2.0, 2.5, 1.5, 1.0;
  s.drift_rates = Vector::Zero(6);
  s.drift_rates(2) = 0.01;  // perishable priority rises
  s.capacity_shocks.push_back({120, 0, 2.0});  // demand surge response
  s.sigma2 = 0.01;
  s.theta_domain = ThetaDomain::box(6, 0.0, 5.0);

  EstimatorConfig& e = c.estimator;
  e.mirror.kind = MirrorMapKind::Euclidean;
  e.mirror.domain = s.theta_domain;
  e.theta_init = Vector::Zero(6);
  e.eta = 0.05;
  e.loss = LossKind::DecisionLoss;
  e.decision.method = DecisionGradMethod::ActiveSetAnalytic;
  e.decision.solver = s.solver;
  return c;
}

inline RunConfig finance() {
  RunConfig c;
  c.name = "finance";
  c.agent_labels = {"profit", "risk", "compliance", "liquidity", "fair_value"};
  ScenarioSpec& s = c.scenario;
  s.domain = DomainId::Finance;
  s.n = 5;  // Profit, Risk, Compliance, Liquidity, FairValue
  s.k = 2;  // budget cap, regulatory ratio
  s.T = 300;
  s.B = Matrix(2, 5);
  s.B << 1.0, 1.0, 1.0, 1.0, 1.0,  // budget
      0.5, 2.0, 0.0, 1.0, 0.5;     // regulatory exposure
  s.q = Vector(2);
  s.q << 100.0, 80.0;
  s.cost.kind = CostKind::LinearPenalty;
  s.cost.penalty_weight = 0.3;
  s.cost.penalty_coeffs = Vector(5);
  s.cost.penalty_coeffs << 0.1, 0.9, 0.0, 0.4, 0.2;  // compliance exposure
  s.theta_init = Vector(5);
  s.theta_init << 1.0, 0.4, 1.6, 0.6, 0.8;
  s.drift_rates = Vector(5);
  s.drift_rates << 0.0, 0.005, -0.005, 0.0, 0.0;  // risk up, compliance down
  s.theta_shocks.push_back({150, 2, 1.5});  // regulatory change
  s.sigma2 = 0.01;
  s.theta_domain = ThetaDomain::box(5, 0.0, 2.0);
  s.solver.tikhonov_rho = 0.15;
  s.solver.tikhonov_center = Vector(5);
  s.solver.tikhonov_center << 25.0, 15.0, 20.0, 20.0, 15.0;

  EstimatorConfig& e = c.estimator;
  e.mirror.kind = MirrorMapKind::Euclidean;
  e.mirror.domain = s.theta_domain;
  e.theta_init = Vector::Ones(5);
  e.eta = 0.02;
  e.loss = LossKind::DecisionLoss;
  e.decision.method = DecisionGradMethod::ActiveSetAnalytic;
  e.decision.solver = s.solver;
  return c;
}

}  // namespace presets

inline std::vector<std::string> preset_names() {
  return {"healthcare", "energy", "logistics", "finance"};
}

inline RunConfig preset_by_name(const std::string& name) {
  if (name == "healthcare") return presets::healthcare();
  if (name == "energy") return presets::energy();
  if (name == "logistics") return presets::logistics();
  if (name == "finance") return presets::finance();
  throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace driftio
