#pragma once

#include "bralt/al_loop.hpp"
#include "bralt/metrics.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bralt {

/// Shortest round-trip text for a double.
std::string format_double(double v);

/// Columns: strategy,seed,iteration,labeled_count,budget_fraction,accuracy,seconds.
void write_runlog_csv(const RunLog& log, const std::filesystem::path& path);
/// Inverse of write_runlog_csv (diagnostics and model are not stored).
/// Throws FormatError with the offending row.
RunLog read_runlog_csv(const std::filesystem::path& path);

/// Columns: iteration,key,value.
void write_diagnostics_csv(const RunLog& log, const std::filesystem::path& path);

struct StrategySummary {
  std::string strategy;
  std::size_t seeds = 0;
  MeanInterval aubc;
  MeanInterval f_acc;
};

/// Groups logs by strategy in first-appearance order.
std::vector<std::vector<RunLog>> group_by_strategy(const std::vector<RunLog>& logs);
StrategySummary summarize(const std::vector<RunLog>& logs_of_one_strategy);

/// Columns: strategy,seeds,aubc_mean,aubc_half_width,f_acc_mean,f_acc_half_width.
void write_summary_csv(const std::vector<StrategySummary>& rows, const std::filesystem::path& path);

/// Columns: budget_fraction,mean,half_width. Records are matched by iteration.
void write_curve_csv(const std::vector<RunLog>& logs_of_one_strategy, const std::filesystem::path& path);

/// Header row of method names, then one row per method.
void write_penalty_csv(const std::vector<std::string>& methods, const std::vector<std::vector<int>>& P,
                       const std::filesystem::path& path);

}  // namespace bralt
