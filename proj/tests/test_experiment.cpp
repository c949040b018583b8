#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "driftio/config.hpp"
#include "driftio/runner.hpp"

using namespace driftio;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Small custom domain so the orchestration tests stay fast.
RunConfig tiny_config() {
  RunConfig c;
  c.name = "tiny";
  ScenarioSpec& s = c.scenario;
  s.n = 3;
  s.k = 1;
  s.T = 25;
  s.theta_init = Vector(3);
  s.theta_init << 2.0, 1.0, 1.5;
  s.drift_rates = Vector(3);
  s.drift_rates << 0.0, 0.01, 0.0;
  s.theta_shocks.push_back({15, 0, 1.3});
  s.sigma2 = 0.02;
  s.B = Matrix::Ones(1, 3);
  s.q = Vector::Constant(1, 100.0);
  s.cost.kind = CostKind::QuadraticFairness;
  s.cost.fairness_weight = 0.1;
  s.theta_domain = ThetaDomain::box(3, 0.0, 5.0);
  EstimatorConfig& e = c.estimator;
  e.mirror.domain = s.theta_domain;
  e.theta_init = Vector::Zero(3);
  e.eta = 0.08;
  e.loss = LossKind::DecisionLoss;
  e.decision.method = DecisionGradMethod::ActiveSetAnalytic;
  c.base_seeds = {42, 77, 123};
  c.replications = 3;
  c.batch_iterations = 400;
  return c;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("driftio_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config JSON round trip", "[experiment][config]") {
  for (const auto& name : preset_names()) {
    const RunConfig a = preset_by_name(name);
    const RunConfig b = config_from_json(config_to_json(a));
    REQUIRE(b.name == a.name);
    REQUIRE(b.scenario.n == a.scenario.n);
    REQUIRE(b.scenario.T == a.scenario.T);
    REQUIRE(b.scenario.B == a.scenario.B);
    REQUIRE(b.scenario.q == a.scenario.q);
    REQUIRE(b.scenario.theta_init == a.scenario.theta_init);
    REQUIRE(b.scenario.drift_rates == a.scenario.drift_rates);
    REQUIRE(b.scenario.cost.penalty_coeffs == a.scenario.cost.penalty_coeffs);
    REQUIRE(b.scenario.solver.tikhonov_rho == a.scenario.solver.tikhonov_rho);
    REQUIRE(b.estimator.eta == a.estimator.eta);
    REQUIRE(b.estimator.theta_init == a.estimator.theta_init);
    REQUIRE(b.replications == a.replications);
    REQUIRE(b.agent_labels == a.agent_labels);
  }
}

TEST_CASE("shipped preset files match the builtins and validate", "[experiment][config]") {
  for (const auto& name : preset_names()) {
    const fs::path file = fs::path(DRIFTIO_SOURCE_DIR) / "configs" / "presets" / (name + ".json");
    REQUIRE(fs::exists(file));
    REQUIRE(validate_config_file(file.string()).empty());
    const RunConfig from_file = config_from_json(load_json_file(file.string()));
    const RunConfig builtin = preset_by_name(name);
    REQUIRE(from_file.scenario.B == builtin.scenario.B);
    REQUIRE(from_file.scenario.theta_init == builtin.scenario.theta_init);
    REQUIRE(from_file.estimator.eta == builtin.estimator.eta);
    REQUIRE(from_file.scenario.T == builtin.scenario.T);
  }
}

TEST_CASE("config validation catches the named violations", "[experiment][config]") {
  const Json good = config_to_json(preset_by_name("healthcare"));
  REQUIRE(validate_config_json(good).empty());

  SECTION("shock time out of range") {
    Json bad = good;
    bad["scenario"]["theta_shocks"] = Json::array(
        {Json{{"t", 0}, {"coordinate", 0}, {"multiplier", 2.0}}});
    const auto v = validate_config_json(bad);
    REQUIRE_FALSE(v.empty());
    bool found = false;
    for (const auto& msg : v)
      if (msg.find("shock time out of range [1, T]") != std::string::npos) found = true;
    REQUIRE(found);
  }
  SECTION("initial estimate outside the domain names the coordinate") {
    Json bad = good;
    bad["estimator"]["theta_init"][2] = 99.0;
    const auto v = validate_config_json(bad);
    REQUIRE_FALSE(v.empty());
    bool found = false;
    for (const auto& msg : v)
      if (msg.find("coordinate 2") != std::string::npos) found = true;
    REQUIRE(found);
  }
  SECTION("negative capacity") {
    Json bad = good;
    bad["scenario"]["q"][0] = -1.0;
    const auto v = validate_config_json(bad);
    REQUIRE_FALSE(v.empty());
  }
}

TEST_CASE("run_domain writes reports and an aggregate", "[experiment][runner]") {
  const RunConfig cfg = tiny_config();
  const fs::path dir = fresh_dir("run");
  RunOptions opt;
  opt.out_dir = dir.string();
  const RunOutcome outcome = run_domain(cfg, opt);
  REQUIRE(outcome.ok());
  REQUIRE(outcome.report_files.size() == 3);  // three base seeds
  REQUIRE(fs::exists(dir / "tiny" / "aggregate.csv"));

  SECTION("aggregate means re-derive from the per-seed reports") {
    std::vector<RunReport> reports;
    for (const auto& f : outcome.report_files) reports.push_back(load_report(f));
    // Pick t = 10, metric recovery_error.
    double mean = 0.0;
    for (const auto& r : reports) mean += r.per_t[9].recovery_error;
    mean /= static_cast<double>(reports.size());

    const std::string csv = slurp(dir / "tiny" / "aggregate.csv");
    std::istringstream lines(csv);
    std::string line;
    bool found = false;
    while (std::getline(lines, line)) {
      if (line.find(",10,recovery_error,") != std::string::npos) {
        const size_t pos = line.find(",10,recovery_error,") + std::string(",10,recovery_error,").size();
        const double got = std::stod(line.substr(pos));
        REQUIRE_THAT(got, Catch::Matchers::WithinRel(mean, 1e-8));
        found = true;
      }
    }
    REQUIRE(found);
  }
}

TEST_CASE("identical runs are byte-identical", "[experiment][determinism]") {
  const RunConfig cfg = tiny_config();
  const fs::path d1 = fresh_dir("det1");
  const fs::path d2 = fresh_dir("det2");
  RunOptions o1, o2;
  o1.out_dir = d1.string();
  o2.out_dir = d2.string();
  REQUIRE(run_domain(cfg, o1).ok());
  REQUIRE(run_domain(cfg, o2).ok());
  for (const auto& entry : fs::directory_iterator(d1 / "tiny")) {
    const fs::path other = d2 / "tiny" / entry.path().filename();
    REQUIRE(fs::exists(other));
    REQUIRE(slurp(entry.path()) == slurp(other));
  }
}

TEST_CASE("report JSON round trip", "[experiment][report]") {
  const RunConfig cfg = tiny_config();
  CellSpec cell;
  cell.seed = 42;
  cell.sigma2 = 0.02;
  const RunReport rep = run_cell(cfg, cell);
  const Json parsed = Json::parse(report_to_json(rep));
  const RunReport back = report_from_json(parsed);
  REQUIRE(back.domain == rep.domain);
  REQUIRE(back.seed == rep.seed);
  REQUIRE(back.per_t.size() == rep.per_t.size());
  REQUIRE_THAT(back.summary.cum_dynamic_regret,
               Catch::Matchers::WithinRel(rep.summary.cum_dynamic_regret, 1e-8));
  REQUIRE(back.summary.c_hat.has_value());
  // Summaries re-derive from per_t.
  double cum = 0.0;
  for (const auto& p : back.per_t) cum += p.loss_at_estimate - p.loss_at_truth;
  REQUIRE_THAT(cum, Catch::Matchers::WithinRel(back.summary.cum_dynamic_regret, 1e-6));
}

TEST_CASE("figure emission", "[experiment][figures]") {
  SECTION("F1 regenerates trajectories; the drifting coordinate ramps") {
    const fs::path dir = fresh_dir("fig1");
    const EmitResult res = emit_figure_data(dir.string(), "F1");
    REQUIRE(res.ok());
    const std::string csv = slurp(dir / "figures" / "F1.csv");
    // healthcare elderly rises by exactly 0.005 per period until the cap.
    std::istringstream lines(csv);
    std::string line;
    std::vector<double> elderly;
    while (std::getline(lines, line)) {
      if (line.find("healthcare,") == 0 && line.find("theta_elderly") != std::string::npos)
        elderly.push_back(std::stod(line.substr(line.rfind(',', line.rfind(',') - 1) + 1)));
    }
    REQUIRE(elderly.size() == 200);
    for (size_t t = 1; t < elderly.size(); ++t)
      REQUIRE_THAT(elderly[t] - elderly[t - 1], Catch::Matchers::WithinAbs(0.005, 1e-9));
  }
  SECTION("missing runs produce the exact commands") {
    const fs::path dir = fresh_dir("fig2");
    const EmitResult res = emit_figure_data(dir.string(), "F2");
    REQUIRE_FALSE(res.ok());
    REQUIRE(res.missing.size() == 2);
    REQUIRE(res.missing[0].command.find("driftio run healthcare") != std::string::npos);
    const EmitResult res4 = emit_figure_data(dir.string(), "F4");
    REQUIRE_FALSE(res4.ok());
    REQUIRE(res4.missing[0].command.find("--mode noise-sweep") != std::string::npos);
  }
  SECTION("unknown figure id is a usage error") {
    REQUIRE_THROWS_AS(emit_figure_data("/tmp", "F9"), std::invalid_argument);
  }
  SECTION("F4 collapses the noise sweep into rescaled curves and constants") {
    const fs::path dir = fresh_dir("fig4");
    RunOptions opt;
    opt.out_dir = dir.string();
    opt.mode = "noise-sweep";
    opt.seeds = {42};
    for (const char* d : {"healthcare", "energy"}) {
      RunConfig cfg = preset_by_name(d);
      cfg.batch_iterations = 300;  // comparator precision is irrelevant here
      REQUIRE(run_domain(cfg, opt).ok());
    }
    const EmitResult res = emit_figure_data(dir.string(), "F4");
    REQUIRE(res.ok());
    const std::string csv = slurp(dir / "figures" / "F4.csv");
    REQUIRE(csv.find("rescaled_median_error") != std::string::npos);
    REQUIRE(csv.find("c_hat_spread") != std::string::npos);
    REQUIRE(csv.rfind("\n") == csv.size() - 1);  // newline-terminated
  }
}

TEST_CASE("noiseless healthcare desk-scale run recovers the parameter", "[experiment][presets]") {
  RunConfig cfg = preset_by_name("healthcare");
  cfg.batch_iterations = 500;  // the check targets recovery, not the comparator
  CellSpec cell;
  cell.seed = 42;
  cell.sigma2 = 0.0;
  const RunReport rep = run_cell(cfg, cell);
  REQUIRE(rep.summary.final_error <= 0.2);
  bool has_rho = false;
  for (const auto& [k, v] : rep.metadata)
    if (k == "tikhonov_rho") has_rho = true;
  REQUIRE(has_rho);  // reports carry the convention registry
}

TEST_CASE("energy with the drift multiplier off keeps only the shock variation",
          "[experiment][presets]") {
  RunConfig cfg = preset_by_name("energy");
  cfg.scenario.drift_multiplier = 0.0;
  const PreferenceTrajectory traj = generate_trajectory(cfg.scenario);
  const VariationBudget v = variation_budget(traj);
  REQUIRE(v.smooth == 0.0);
  REQUIRE(v.shock > 0.0);
  REQUIRE_THAT(v.total, Catch::Matchers::WithinAbs(v.shock, 1e-12));
}

TEST_CASE("clip bookkeeping across the shipped presets", "[experiment][presets]") {
  // The published energy drift saturates its estimator domain over the full
  // horizon, so clipping is expected there; the other presets stay interior.
  for (const auto& name : preset_names()) {
    const RunConfig cfg = preset_by_name(name);
    const PreferenceTrajectory traj = generate_trajectory(cfg.scenario);
    if (name == "energy") {
      REQUIRE(traj.clipped_count > 0);
    } else {
      REQUIRE(traj.clipped_count == 0);
    }
    for (const auto& th : traj.thetas) REQUIRE(cfg.scenario.theta_domain.contains(th, 1e-12));
  }
}

TEST_CASE("worker count does not change the outputs", "[experiment][determinism]") {
  const RunConfig cfg = tiny_config();
  const fs::path d1 = fresh_dir("thr1");
  const fs::path d4 = fresh_dir("thr4");
  RunOptions o1, o4;
  o1.out_dir = d1.string();
  o4.out_dir = d4.string();
  setenv("DRIFTIO_THREADS", "1", 1);
  REQUIRE(run_domain(cfg, o1).ok());
  setenv("DRIFTIO_THREADS", "4", 1);
  REQUIRE(run_domain(cfg, o4).ok());
  unsetenv("DRIFTIO_THREADS");
  for (const auto& entry : fs::directory_iterator(d1 / "tiny")) {
    const fs::path other = d4 / "tiny" / entry.path().filename();
    REQUIRE(fs::exists(other));
    REQUIRE(slurp(entry.path()) == slurp(other));
  }
}

TEST_CASE("dynamic regret dominates static regret on noiseless runs",
          "[experiment][diagnostics]") {
  RunConfig cfg = tiny_config();
  cfg.scenario.sigma2 = 0.0;
  CellSpec cell;
  cell.sigma2 = 0.0;
  const RunReport rep = run_cell(cfg, cell);
  REQUIRE(rep.summary.cum_dynamic_regret >= rep.summary.cum_static_regret - 1e-6);
}

TEST_CASE("cli smoke", "[experiment][cli]") {
  const std::string cli = DRIFTIO_CLI_BINARY;
  const fs::path dir = fresh_dir("cli");

  SECTION("validate accepts every shipped preset") {
    for (const auto& name : preset_names()) {
      const std::string cmd = cli + " validate " +
                              (fs::path(DRIFTIO_SOURCE_DIR) / "configs" / "presets" /
                               (name + ".json")).string() + " > /dev/null";
      REQUIRE(std::system(cmd.c_str()) == 0);
    }
  }
  SECTION("list-presets exits cleanly") {
    REQUIRE(std::system((cli + " list-presets > /dev/null").c_str()) == 0);
  }
  SECTION("unknown figure id exits with a usage error") {
    const int rc = std::system((cli + " emit F9 --out " + dir.string() + " 2> /dev/null").c_str());
    REQUIRE(WEXITSTATUS(rc) == 2);
  }
  SECTION("run accepts a config file path") {
    const RunConfig cfg = tiny_config();
    const fs::path cfg_path = dir / "tiny.json";
    std::ofstream(cfg_path) << config_to_json(cfg).dump(2) << "\n";
    const std::string cmd = cli + " run " + cfg_path.string() + " --seeds 42 --out " +
                            (dir / "runs").string() + " > /dev/null";
    REQUIRE(std::system(cmd.c_str()) == 0);
    REQUIRE(fs::exists(dir / "runs" / "tiny" / "drift-aware_sigma0.02_mult1_seed42.json"));
  }
}
