// Experiment orchestration: enumerates (seed x estimator x noise x drift)
// cells, runs them on a small worker pool (capped by DRIFTIO_THREADS), writes
// one JSON report per cell plus a per-domain aggregate CSV, and emits the
// tidy figure-data CSVs. Output files are written atomically
// (write-temp-then-rename) and all row orders are fixed, so identical
// commands produce byte-identical files.

#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "driftio/report.hpp"

namespace driftio {

namespace fs = std::filesystem;

inline int worker_cap() {
  if (const char* env = std::getenv("DRIFTIO_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Run options and execution
// ---------------------------------------------------------------------------

struct RunOptions {
  std::vector<long> seeds;                 // empty: extend base seeds
  std::vector<double> sigma2_levels;       // empty: preset default
  std::vector<double> drift_multipliers;   // empty: {1}
  std::vector<EstimatorKind> estimators;   // empty: {drift-aware}
  std::optional<LossKind> loss_override;
  std::optional<int> replications;
  std::string mode = "default";  // default | baseline-comparison | noise-sweep | drift-sweep
  std::string out_dir = "out";
};

struct CellFailure {
  std::string file_stem;
  std::string error;
};

struct RunOutcome {
  std::vector<std::string> report_files;
  std::vector<CellFailure> failures;
  bool ok() const { return failures.empty(); }
};

inline std::string cell_file_stem(const CellSpec& cell) {
  std::ostringstream s;
  s << to_string(cell.estimator) << "_sigma" << fmt9(cell.sigma2) << "_mult"
    << fmt9(cell.drift_multiplier) << "_seed" << cell.seed;
  return s.str();
}

inline std::vector<CellSpec> enumerate_cells(const RunConfig& cfg, const RunOptions& opt) {
  std::vector<long> seeds = opt.seeds;
  if (seeds.empty()) {
    int reps = opt.replications.value_or(
        opt.mode == "baseline-comparison" ? cfg.baseline_replications : cfg.replications);
    seeds = extend_seeds(cfg.base_seeds, reps);
  }
  std::vector<double> sigmas = opt.sigma2_levels;
  if (sigmas.empty()) {
    sigmas = opt.mode == "noise-sweep" ? cfg.sigma2_levels
                                       : std::vector<double>{cfg.scenario.sigma2};
  }
  std::vector<double> mults = opt.drift_multipliers;
  if (mults.empty()) {
    mults = opt.mode == "drift-sweep" ? std::vector<double>{0.5, 1.0, 2.0}
                                      : std::vector<double>{cfg.scenario.drift_multiplier};
  }
  std::vector<EstimatorKind> estimators = opt.estimators;
  if (estimators.empty()) {
    estimators = opt.mode == "baseline-comparison"
                     ? std::vector<EstimatorKind>{EstimatorKind::DriftAware,
                                                  EstimatorKind::FixedOnline,
                                                  EstimatorKind::StaticIO}
                     : std::vector<EstimatorKind>{EstimatorKind::DriftAware};
  }
  const LossKind loss = opt.loss_override.value_or(cfg.estimator.loss);

  std::vector<CellSpec> cells;
  for (EstimatorKind e : estimators)
    for (double s2 : sigmas)
      for (double m : mults)
        for (long seed : seeds) cells.push_back({e, seed, s2, m, loss});
  return cells;
}

namespace detail {

struct AggKey {
  std::string estimator;
  double sigma2;
  double mult;
  bool operator<(const AggKey& o) const {
    if (estimator != o.estimator) return estimator < o.estimator;
    if (sigma2 != o.sigma2) return sigma2 < o.sigma2;
    return mult < o.mult;
  }
};

}  // namespace detail

/// Per-period means and standard deviations across seeds, one block per
/// (estimator, sigma2, drift multiplier) cell group.
inline std::string aggregate_csv(const std::string& domain,
                                 const std::vector<RunReport>& reports) {
  std::map<detail::AggKey, std::vector<const RunReport*>> groups;
  for (const auto& r : reports)
    groups[{r.estimator, r.sigma2, r.drift_multiplier}].push_back(&r);

  std::ostringstream o;
  o << "domain,estimator,sigma2,drift_multiplier,t,metric,mean,std\n";
  for (const auto& [key, group] : groups) {
    const size_t T = group.front()->per_t.size();
    const double n = static_cast<double>(group.size());
    const char* metrics[] = {"recovery_error", "loss_at_estimate", "cum_dynamic_regret",
                             "cum_static_regret"};
    for (const char* metric : metrics) {
      std::vector<double> cum(group.size(), 0.0);
      std::vector<double> cum_star(group.size(), 0.0);
      for (size_t t = 0; t < T; ++t) {
        double sum = 0.0, sumsq = 0.0;
        for (size_t g = 0; g < group.size(); ++g) {
          const auto& row = group[g]->per_t[t];
          double v = 0.0;
          if (std::string(metric) == "recovery_error") v = row.recovery_error;
          if (std::string(metric) == "loss_at_estimate") v = row.loss_at_estimate;
          if (std::string(metric) == "cum_dynamic_regret") {
            cum[g] += row.loss_at_estimate - row.loss_at_truth;
            v = cum[g];
          }
          if (std::string(metric) == "cum_static_regret") {
            cum_star[g] += row.loss_at_estimate - row.loss_at_static_star;
            v = cum_star[g];
          }
          sum += v;
          sumsq += v * v;
        }
        const double mean = sum / n;
        const double var = std::max(0.0, sumsq / n - mean * mean);
        o << domain << "," << key.estimator << "," << fmt9(key.sigma2) << "," << fmt9(key.mult)
          << "," << (t + 1) << "," << metric << "," << fmt9(mean) << "," << fmt9(std::sqrt(var))
          << "\n";
      }
    }
  }
  return o.str();
}

/// Run every cell of a domain. Cells execute concurrently; files and the
/// aggregate are written in a fixed order after the join barrier. Partial
/// results are preserved on failure and a failure manifest is written.
inline RunOutcome run_domain(const RunConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  const std::vector<CellSpec> cells = enumerate_cells(cfg, opt);
  const fs::path dir = fs::path(opt.out_dir) / cfg.name;

  std::vector<RunReport> reports(cells.size());
  std::vector<std::string> errors(cells.size());
  std::atomic<size_t> next{0};
  const int workers = std::min<int>(worker_cap(), static_cast<int>(cells.size()));

  auto work = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        reports[i] = run_cell(cfg, cells[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();

  RunOutcome out;
  std::vector<const RunReport*> ok_reports;
  for (size_t i = 0; i < cells.size(); ++i) {
    const std::string stem = cell_file_stem(cells[i]);
    if (!errors[i].empty()) {
      out.failures.push_back({stem, errors[i]});
      continue;
    }
    const fs::path file = dir / (stem + ".json");
    write_file_atomic(file, report_to_json(reports[i]));
    out.report_files.push_back(file.string());
    ok_reports.push_back(&reports[i]);
  }

  if (!ok_reports.empty()) {
    std::vector<RunReport> flat;
    flat.reserve(ok_reports.size());
    for (const auto* r : ok_reports) flat.push_back(*r);
    write_file_atomic(dir / "aggregate.csv", aggregate_csv(cfg.name, flat));
  }
  if (!out.failures.empty()) {
    std::ostringstream m;
    m << "{\n  \"failures\": [\n";
    for (size_t i = 0; i < out.failures.size(); ++i) {
      m << "    {\"cell\": \"" << json_escape(out.failures[i].file_stem) << "\", \"error\": \""
        << json_escape(out.failures[i].error) << "\"}" << (i + 1 < out.failures.size() ? "," : "")
        << "\n";
    }
    m << "  ]\n}\n";
    write_file_atomic(dir / "failures.json", m.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Figure data emission
// ---------------------------------------------------------------------------

struct FigureRequirement {
  std::string domain;
  std::string estimator;
  double sigma2;
  double mult;
  std::string command;  // exact command that produces the missing runs
};

struct EmitResult {
  std::vector<std::string> files_written;
  std::vector<FigureRequirement> missing;
  bool ok() const { return missing.empty(); }
};

namespace detail {

struct TidyRow {
  std::string domain;
  std::string seed;  // empty for deterministic artifacts
  int t = 0;
  std::string metric;
  double value = 0.0;
  std::string condition;
};

inline std::string tidy_csv(const std::vector<TidyRow>& rows) {
  std::ostringstream o;
  o << "domain,seed,t,metric,value,condition\n";
  for (const auto& r : rows) {
    o << r.domain << "," << r.seed << "," << r.t << "," << r.metric << "," << fmt9(r.value)
      << "," << r.condition << "\n";
  }
  return o.str();
}

// Reports in the out-dir for one domain matching (estimator, sigma2, mult),
// sorted by seed for stable output.
inline std::vector<RunReport> find_reports(const std::string& out_dir, const std::string& domain,
                                           const std::string& estimator, double sigma2,
                                           double mult) {
  std::vector<RunReport> found;
  const fs::path dir = fs::path(out_dir) / domain;
  if (!fs::exists(dir)) return found;
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json" && entry.path().filename() != "failures.json")
      paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    RunReport r;
    try {
      r = load_report(p.string());
    } catch (...) {
      continue;
    }
    if (r.estimator == estimator && std::abs(r.sigma2 - sigma2) < 1e-12 &&
        std::abs(r.drift_multiplier - mult) < 1e-12)
      found.push_back(std::move(r));
  }
  std::sort(found.begin(), found.end(),
            [](const RunReport& a, const RunReport& b) { return a.seed < b.seed; });
  return found;
}

inline std::vector<double> median_error_curve(const std::vector<RunReport>& reports) {
  const size_t T = reports.front().per_t.size();
  std::vector<double> med(T);
  for (size_t t = 0; t < T; ++t) {
    std::vector<double> col;
    col.reserve(reports.size());
    for (const auto& r : reports) col.push_back(r.per_t[t].recovery_error);
    std::sort(col.begin(), col.end());
    med[t] = col[col.size() / 2];
  }
  return med;
}

}  // namespace detail

/// Writes the tidy CSV for one figure id from runs below out_dir. When runs
/// are missing, returns the exact commands needed instead of writing.
inline EmitResult emit_figure_data(const std::string& out_dir, const std::string& figure_id) {
  EmitResult res;
  std::vector<detail::TidyRow> rows;
  const fs::path figdir = fs::path(out_dir) / "figures";

  auto require = [&](const std::string& domain, const std::string& estimator, double sigma2,
                     double mult, const std::string& command) {
    const auto reports = detail::find_reports(out_dir, domain, estimator, sigma2, mult);
    if (reports.empty()) res.missing.push_back({domain, estimator, sigma2, mult, command});
    return reports;
  };

  if (figure_id == "F1") {
    // True preference trajectories; deterministic, regenerated from presets.
    for (const std::string& name : {std::string("healthcare"), std::string("energy")}) {
      const RunConfig cfg = preset_by_name(name);
      const PreferenceTrajectory traj = generate_trajectory(cfg.scenario);
      for (int t = 1; t <= traj.T(); ++t) {
        for (int i = 0; i < cfg.scenario.n; ++i) {
          rows.push_back({name, "", t, "theta_" + cfg.agent_labels[static_cast<size_t>(i)],
                          traj.thetas[static_cast<size_t>(t - 1)](i), "truth"});
        }
      }
    }
  } else if (figure_id == "F2" || figure_id == "A1") {
    const std::vector<std::string> domains =
        figure_id == "F2" ? std::vector<std::string>{"healthcare", "energy"}
                          : std::vector<std::string>{"healthcare", "energy", "logistics",
                                                     "finance"};
    for (const auto& d : domains) {
      const RunConfig cfg = preset_by_name(d);
      const auto reports = require(d, "drift-aware", cfg.scenario.sigma2, 1.0,
                                   "driftio run " + d + " --out " + out_dir);
      for (const auto& r : reports)
        for (const auto& p : r.per_t)
          rows.push_back({d, std::to_string(r.seed), p.t, "recovery_error", p.recovery_error,
                          "sigma2=" + fmt9(r.sigma2)});
    }
  } else if (figure_id == "F3") {
    for (const std::string& d : {std::string("healthcare"), std::string("energy")}) {
      const RunConfig cfg = preset_by_name(d);
      const auto reports = require(d, "drift-aware", cfg.scenario.sigma2, 1.0,
                                   "driftio run " + d + " --out " + out_dir);
      for (const auto& r : reports) {
        double cum_s = 0.0, cum_d = 0.0;
        for (const auto& p : r.per_t) {
          cum_s += p.loss_at_estimate - p.loss_at_static_star;
          cum_d += p.loss_at_estimate - p.loss_at_truth;
          rows.push_back({d, std::to_string(r.seed), p.t, "cum_static_regret", cum_s, "regret"});
          rows.push_back({d, std::to_string(r.seed), p.t, "cum_dynamic_regret", cum_d, "regret"});
        }
      }
    }
  } else if (figure_id == "F4" || figure_id == "A3") {
    const std::vector<std::string> domains =
        figure_id == "F4" ? std::vector<std::string>{"healthcare", "energy"}
                          : std::vector<std::string>{"logistics", "finance"};
    for (const auto& d : domains) {
      const RunConfig cfg = preset_by_name(d);
      std::vector<std::vector<double>> medians;
      std::vector<double> sigmas;
      for (double s2 : cfg.sigma2_levels) {
        const auto reports = require(d, "drift-aware", s2, 1.0,
                                     "driftio run " + d + " --mode noise-sweep --out " + out_dir);
        if (reports.empty()) continue;
        medians.push_back(detail::median_error_curve(reports));
        sigmas.push_back(s2);
        for (const auto& r : reports)
          for (const auto& p : r.per_t)
            rows.push_back({d, std::to_string(r.seed), p.t, "recovery_error", p.recovery_error,
                            "sigma2=" + fmt9(s2)});
      }
      if (sigmas.size() == cfg.sigma2_levels.size()) {
        const NoiseCollapse nc = noise_collapse(medians, sigmas);
        for (const auto& lev : nc.levels) {
          for (size_t t = 0; t < lev.rescaled.size(); ++t)
            rows.push_back({d, "", static_cast<int>(t + 1), "rescaled_median_error",
                            lev.rescaled[t], "sigma2=" + fmt9(lev.sigma2)});
          rows.push_back({d, "", 0, "c_hat", lev.c_hat, "sigma2=" + fmt9(lev.sigma2)});
        }
        rows.push_back({d, "", 0, "c_hat_mean", nc.c_hat, "collapse"});
        rows.push_back({d, "", 0, "c_hat_spread", nc.spread, "collapse"});
      }
    }
  } else if (figure_id == "F5") {
    for (const std::string& d : {std::string("healthcare"), std::string("energy")}) {
      const RunConfig cfg = preset_by_name(d);
      for (double m : {0.5, 1.0, 2.0}) {
        const auto reports = require(d, "drift-aware", cfg.scenario.sigma2, m,
                                     "driftio run " + d + " --mode drift-sweep --out " + out_dir);
        for (const auto& r : reports) {
          for (const auto& p : r.per_t)
            rows.push_back({d, std::to_string(r.seed), p.t, "recovery_error", p.recovery_error,
                            "drift_mult=" + fmt9(m)});
          rows.push_back({d, std::to_string(r.seed), 0, "terminal_dynamic_regret",
                          r.summary.cum_dynamic_regret, "drift_mult=" + fmt9(m)});
        }
      }
    }
  } else if (figure_id == "F6") {
    for (const std::string& d :
         {std::string("healthcare"), std::string("energy"), std::string("logistics"),
          std::string("finance")}) {
      const RunConfig cfg = preset_by_name(d);
      for (const char* est : {"drift-aware", "fixed-online", "static"}) {
        const auto reports =
            require(d, est, cfg.scenario.sigma2, 1.0,
                    "driftio run " + d + " --mode baseline-comparison --out " + out_dir);
        for (const auto& r : reports) {
          double cum = 0.0;
          for (const auto& p : r.per_t) {
            cum += p.loss_at_estimate - p.loss_at_truth;
            rows.push_back({d, std::to_string(r.seed), p.t, "cum_dynamic_regret", cum, est});
          }
        }
      }
    }
  } else {
    throw std::invalid_argument("unknown figure id: " + figure_id +
                                " (expected F1..F6, A1, A3)");
  }

  if (!res.missing.empty()) return res;
  const fs::path file = figdir / (figure_id + ".csv");
  write_file_atomic(file, detail::tidy_csv(rows));
  res.files_written.push_back(file.string());
  return res;
}

}  // namespace driftio
