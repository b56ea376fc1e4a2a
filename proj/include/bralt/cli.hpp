#pragma once

#include "bralt/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bralt {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  /// Keep only these strategies (empty: all from the config).
  std::vector<std::string> strategies;
  std::optional<std::string> out;
  std::optional<int> jobs;
};

/// Runs every (strategy, seed) pair and writes, under the output directory:
/// manifest.json, config.toml, runlogs/, diagnostics/, curves/, summary.csv, penalty.csv.
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);

struct GenDataOptions {
  std::optional<std::filesystem::path> config;
  DatasetConfig dataset{};
  std::filesystem::path out = "dataset.csv";
};

/// Writes the dataset CSV and prints per-class counts.
int cmd_gen_data(const GenDataOptions& options, std::ostream& out, std::ostream& err);

/// Recomputes summary.csv and penalty.csv from the run logs in `runlog_dir`.
int cmd_report(const std::filesystem::path& runlog_dir, const std::optional<std::filesystem::path>& out_dir,
               std::ostream& out, std::ostream& err);

/// Executes the independent runs on `jobs` threads (0: hardware concurrency).
/// Results come back in job order.
std::vector<RunLog> run_all(const ExperimentConfig& config, std::shared_ptr<const Dataset> dataset,
                            int jobs);

/// Parses argv and dispatches to a subcommand.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace bralt
