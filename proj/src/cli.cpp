#include "bralt/cli.hpp"

#include "bralt/errors.hpp"
#include "bralt/metrics.hpp"
#include "bralt/runlog_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <ostream>
#include <thread>

namespace bralt {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string run_stem(const RunLog& log) { return log.strategy + "_seed" + std::to_string(log.seed); }

int report_error(std::ostream& err, const std::exception& e) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    err << "invalid config:\n";
    for (const auto& p : v->problems()) err << "  " << p << '\n';
    return kExitValidation;
  }
  err << "error: " << e.what() << '\n';
  return kExitRuntime;
}

std::vector<std::size_t> curve_budgets(const std::vector<RunLog>& logs) {
  std::vector<std::size_t> budgets;
  for (const auto& log : logs)
    for (const auto& r : log.records) budgets.push_back(r.labeled_count);
  std::sort(budgets.begin(), budgets.end());
  budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
  return budgets;
}

std::vector<std::string> manifest_strategies(const std::filesystem::path& runlogs) {
  for (const auto& dir : {runlogs, runlogs.parent_path()}) {
    std::ifstream in(dir / "manifest.json");
    if (!in) continue;
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("strategies") || !j["strategies"].is_array()) continue;
    std::vector<std::string> names;
    for (const auto& s : j["strategies"])
      if (s.is_string()) names.push_back(s.get<std::string>());
    return names;
  }
  return {};
}

/// summary.csv + penalty.csv; groups are already in output order.
void write_reports(const std::vector<std::vector<RunLog>>& groups, const std::filesystem::path& dir) {
  std::vector<StrategySummary> rows;
  std::vector<std::string> names;
  std::vector<RunLog> all;
  for (const auto& g : groups) {
    rows.push_back(summarize(g));
    names.push_back(g.front().strategy);
    all.insert(all.end(), g.begin(), g.end());
  }
  write_summary_csv(rows, dir / "summary.csv");

  // One benchmark; each cell is the seed-mean accuracy at a budget.
  const auto budgets = curve_budgets(all);
  AccuracyGrid acc;
  for (const auto& g : groups) {
    std::vector<double> row;
    for (auto q : budgets) {
      double s = 0.0;
      for (const auto& log : g) s += accuracy_at(log, q);
      row.push_back(s / static_cast<double>(g.size()));
    }
    acc.push_back({row});
  }
  write_penalty_csv(names, penalty_matrix(acc), dir / "penalty.csv");
}

}  // namespace

std::vector<RunLog> run_all(const ExperimentConfig& config, std::shared_ptr<const Dataset> dataset, int jobs) {
  struct Job {
    std::string strategy;
    std::uint64_t seed;
  };
  std::vector<Job> queue;
  for (const auto& s : config.strategies)
    for (auto seed : config.seeds) queue.push_back({s, seed});

  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, queue.size());

  std::vector<RunLog> results(queue.size());
  std::vector<std::exception_ptr> failures(queue.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < queue.size();) {
      try {
        ALConfig al = config.al;
        al.strategy = queue[i].strategy;
        al.seed = queue[i].seed;
        results[i] = run(dataset, al);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error(queue[i].strategy + " seed " + std::to_string(queue[i].seed) + ": " + e.what());
    }
  }
  return results;
}

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(options.config);
    if (options.seed) cfg.seeds = {*options.seed};
    if (!options.strategies.empty()) {
      for (const auto& s : options.strategies)
        if (std::find(cfg.strategies.begin(), cfg.strategies.end(), s) == cfg.strategies.end() &&
            !is_known_strategy(s))
          throw ValidationError({"--strategy: unknown strategy '" + s + "'"});
      cfg.strategies = options.strategies;
    }
    if (options.out) cfg.output_dir = *options.out;
    if (options.jobs) cfg.jobs = *options.jobs;
    if (auto problems = validate_config(cfg); !problems.empty()) throw ValidationError(std::move(problems));
  } catch (const std::exception& e) {
    return report_error(err, e);
  }

  try {
    const std::filesystem::path dir = cfg.output_dir;
    const auto dataset = build_dataset(cfg.dataset);
    const auto logs = run_all(cfg, dataset, cfg.jobs);

    // Single collector: everything below runs on this thread, in job order.
    std::filesystem::create_directories(dir);
    {
      std::ofstream f(dir / "config.toml", std::ios::binary);
      f << serialize_config(cfg);
    }
    nlohmann::ordered_json manifest;
    manifest["software"] = "bralt";
    manifest["version"] = BRALT_VERSION;
    manifest["config_hash"] = hex64(config_hash(cfg));
    manifest["config_file"] = "config.toml";
    manifest["seeds"] = cfg.seeds;
    manifest["strategies"] = cfg.strategies;
    manifest["dataset_size"] = dataset->size();
    manifest["jobs"] = cfg.jobs;
    {
      std::ofstream f(dir / "manifest.json", std::ios::binary);
      f << manifest.dump(2) << '\n';
    }
    for (const auto& log : logs) {
      write_runlog_csv(log, dir / "runlogs" / (run_stem(log) + ".csv"));
      write_diagnostics_csv(log, dir / "diagnostics" / (run_stem(log) + ".csv"));
    }
    const auto groups = group_by_strategy(logs);
    for (const auto& g : groups) write_curve_csv(g, dir / "curves" / (g.front().strategy + ".csv"));
    write_reports(groups, dir);

    for (const auto& g : groups) {
      const auto s = summarize(g);
      out << s.strategy << ": AUBC " << s.aubc.mean << " +- " << s.aubc.half_width << ", F-acc " << s.f_acc.mean
          << " +- " << s.f_acc.half_width << " (" << s.seeds << " seeds)\n";
    }
    out << "wrote " << (dir / "summary.csv").string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_gen_data(const GenDataOptions& options, std::ostream& out, std::ostream& err) {
  DatasetConfig dc = options.dataset;
  try {
    if (options.config) dc = load_config(*options.config).dataset;
    ExperimentConfig probe;
    probe.dataset = dc;
    std::vector<std::string> problems;
    for (auto& p : validate_config(probe))
      if (p.rfind("dataset.", 0) == 0) problems.push_back(std::move(p));
    if (!problems.empty()) throw ValidationError(std::move(problems));
  } catch (const std::exception& e) {
    return report_error(err, e);
  }
  try {
    const auto data = build_dataset(dc);
    if (options.out.has_parent_path()) std::filesystem::create_directories(options.out.parent_path());
    data->write_csv(options.out);
    const auto counts = data->class_counts();
    out << "wrote " << data->size() << " samples (" << data->dim() << " features) to " << options.out.string()
        << '\n';
    for (std::size_t c = 0; c < counts.size(); ++c) out << "class " << c << ": " << counts[c] << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_report(const std::filesystem::path& runlog_dir, const std::optional<std::filesystem::path>& out_dir,
               std::ostream& out, std::ostream& err) {
  try {
    std::filesystem::path src = runlog_dir;
    if (std::filesystem::is_directory(src / "runlogs")) src /= "runlogs";
    if (!std::filesystem::is_directory(src)) throw ArgumentError("no run log directory at " + runlog_dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(src))
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ArgumentError("no run logs in " + src.string());

    std::vector<RunLog> logs;
    for (const auto& f : files) logs.push_back(read_runlog_csv(f));
    // same row order as `run` when its manifest is around, else alphabetical
    const auto order = manifest_strategies(src);
    const auto rank = [&](const std::string& s) {
      return static_cast<std::size_t>(std::find(order.begin(), order.end(), s) - order.begin());
    };
    std::stable_sort(logs.begin(), logs.end(), [&](const RunLog& a, const RunLog& b) {
      if (a.strategy != b.strategy) {
        const auto ra = rank(a.strategy), rb = rank(b.strategy);
        return ra != rb ? ra < rb : a.strategy < b.strategy;
      }
      return a.seed < b.seed;
    });
    const auto groups = group_by_strategy(logs);
    const std::filesystem::path dir = out_dir.value_or(runlog_dir);
    std::filesystem::create_directories(dir);
    write_reports(groups, dir);
    out << "read " << logs.size() << " run logs; wrote " << (dir / "summary.csv").string() << " and "
        << (dir / "penalty.csv").string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(err, e);
  }
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Batch active learning with TrustSet-matching selection"};
  app.set_version_flag("--version", std::string(BRALT_VERSION));
  app.require_subcommand(1);

  RunOptions run_opts;
  std::uint64_t seed = 0;
  std::string out_dir;
  int jobs = 0;
  auto* run_cmd = app.add_subcommand("run", "Run every (strategy, seed) pair of a config");
  run_cmd->add_option("--config", run_opts.config, "TOML experiment config")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Run only this seed");
  run_cmd->add_option("--strategy", run_opts.strategies, "Run only these strategies");
  auto* out_opt = run_cmd->add_option("--out", out_dir, "Output directory");
  auto* jobs_opt = run_cmd->add_option("--jobs", jobs, "Worker threads (0: all processors)")->check(CLI::NonNegativeNumber);

  GenDataOptions gen;
  std::string config_path, imbalance = "none";
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset CSV");
  auto* gen_cfg_opt = gen_cmd->add_option("--config", config_path, "Take the [dataset] block from a config");
  gen_cmd->add_option("--classes", gen.dataset.num_classes, "Number of classes");
  gen_cmd->add_option("--dim", gen.dataset.dim, "Feature dimension");
  gen_cmd->add_option("--per-class", gen.dataset.per_class, "Samples in the largest class");
  gen_cmd->add_option("--sep", gen.dataset.class_sep, "Distance between class means");
  gen_cmd->add_option("--imbalance", imbalance, "none, linear or longtail")
      ->check(CLI::IsMember({"none", "linear", "longtail"}));
  gen_cmd->add_option("--factor", gen.dataset.imbalance.factor, "Long-tail imbalance factor");
  gen_cmd->add_option("--seed", gen.dataset.seed, "Dataset seed");
  gen_cmd->add_option("--out", gen.out, "Output CSV");

  std::string report_dir, report_out;
  auto* report_cmd = app.add_subcommand("report", "Recompute summary and penalty matrix from run logs");
  report_cmd->add_option("runlog_dir", report_dir, "Directory with run logs (or a run output directory)")->required();
  auto* report_out_opt = report_cmd->add_option("--out", report_out, "Where to write the reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (run_cmd->parsed()) {
    if (*seed_opt) run_opts.seed = seed;
    if (*out_opt) run_opts.out = out_dir;
    if (*jobs_opt) run_opts.jobs = jobs;
    return cmd_run(run_opts, out, err);
  }
  if (gen_cmd->parsed()) {
    if (*gen_cfg_opt) gen.config = config_path;
    gen.dataset.imbalance.kind = imbalance == "linear"     ? ImbalanceKind::linear_ratio
                                 : imbalance == "longtail" ? ImbalanceKind::exponential_longtail
                                                           : ImbalanceKind::none;
    return cmd_gen_data(gen, out, err);
  }
  std::optional<std::filesystem::path> ro;
  if (*report_out_opt) ro = report_out;
  return cmd_report(report_dir, ro, out, err);
}

}  // namespace bralt
