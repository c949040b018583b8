// Command-line front end: config-driven experiment runs, figure-data
// emission, config validation, and preset listing.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "driftio/config.hpp"
#include "driftio/runner.hpp"

using namespace driftio;

namespace {

int cmd_run(const std::string& target, const RunOptions& opt) {
  std::vector<std::string> names;
  if (target == "all") {
    names = preset_names();
  } else {
    names.push_back(target);
  }

  bool all_ok = true;
  for (const auto& name : names) {
    RunConfig cfg;
    try {
      cfg = load_config(name);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
    const RunOutcome outcome = run_domain(cfg, opt);
    std::cout << cfg.name << ": " << outcome.report_files.size() << " report(s) -> "
              << (fs::path(opt.out_dir) / cfg.name).string() << "\n";
    for (const auto& f : outcome.failures) {
      std::cerr << "  FAILED " << f.file_stem << ": " << f.error << "\n";
      all_ok = false;
    }
  }
  return all_ok ? 0 : 1;
}

int cmd_emit(const std::string& figure, const std::string& out_dir) {
  EmitResult res;
  try {
    res = emit_figure_data(out_dir, figure);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
  if (!res.ok()) {
    std::cerr << "missing runs for " << figure << "; produce them with:\n";
    for (const auto& m : res.missing) std::cerr << "  " << m.command << "\n";
    return 1;
  }
  for (const auto& f : res.files_written) std::cout << "wrote " << f << "\n";
  return 0;
}

int cmd_validate(const std::string& path) {
  const std::vector<std::string> violations = validate_config_file(path);
  if (violations.empty()) {
    std::cout << "ok\n";
    return 0;
  }
  for (const auto& v : violations) std::cout << "violation: " << v << "\n";
  return 1;
}

int cmd_list_presets() {
  for (const auto& name : preset_names()) {
    const RunConfig c = preset_by_name(name);
    std::cout << name << ": n=" << c.scenario.n << " k=" << c.scenario.k
              << " T=" << c.scenario.T << " cost=" << to_string(c.scenario.cost.kind)
              << " eta=" << fmt9(c.estimator.eta) << " sigma2=";
    for (size_t i = 0; i < c.sigma2_levels.size(); ++i)
      std::cout << (i ? "/" : "") << fmt9(c.sigma2_levels[i]);
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"driftio: dynamic inverse optimization experiments"};
  app.require_subcommand(1);

  // run
  std::string run_target;
  RunOptions opt;
  std::vector<double> sigmas, mults;
  std::vector<long> seeds;
  std::vector<std::string> estimators;
  std::string loss;
  int replications = 0;
  auto* run = app.add_subcommand("run", "run a preset, a config file, or all presets");
  run->add_option("target", run_target, "preset name, config path, or 'all'")->required();
  run->add_option("--seeds", seeds, "explicit seed list (overrides replications)");
  run->add_option("--sigma2", sigmas, "noise variance level(s)");
  run->add_option("--drift-mult", mults, "drift multiplier(s), e.g. 0.5 1 2");
  run->add_option("--loss", loss, "loss kind: kkt or decision")
      ->check(CLI::IsMember({"kkt", "decision"}));
  run->add_option("--estimator", estimators,
                  "estimator(s): drift-aware, static, fixed-online")
      ->check(CLI::IsMember({"drift-aware", "static", "fixed-online"}));
  run->add_option("--replications", replications, "seed-extension count");
  run->add_option("--mode", opt.mode,
                  "default | baseline-comparison | noise-sweep | drift-sweep")
      ->check(CLI::IsMember({"default", "baseline-comparison", "noise-sweep", "drift-sweep"}));
  run->add_option("--out", opt.out_dir, "output directory (default: out)");

  // emit
  std::string figure, emit_out = "out";
  auto* emit = app.add_subcommand("emit", "emit tidy figure-data CSVs from finished runs");
  emit->add_option("figure", figure, "figure id: F1..F6, A1, A3")->required();
  emit->add_option("--out", emit_out, "directory holding the runs (default: out)");

  // validate
  std::string config_path;
  auto* validate = app.add_subcommand("validate", "check a config file without running");
  validate->add_option("config", config_path, "path to a config JSON")->required();

  app.add_subcommand("list-presets", "list the shipped domain presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("run")) {
      opt.seeds = seeds;
      opt.sigma2_levels = sigmas;
      opt.drift_multipliers = mults;
      if (!loss.empty()) opt.loss_override = loss == "kkt" ? LossKind::KktLoss : LossKind::DecisionLoss;
      for (const auto& e : estimators) opt.estimators.push_back(estimator_from_string(e));
      if (replications > 0) opt.replications = replications;
      return cmd_run(run_target, opt);
    }
    if (app.got_subcommand("emit")) return cmd_emit(figure, emit_out);
    if (app.got_subcommand("validate")) return cmd_validate(config_path);
    if (app.got_subcommand("list-presets")) return cmd_list_presets();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
