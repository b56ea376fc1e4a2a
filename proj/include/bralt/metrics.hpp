#pragma once

#include "bralt/al_loop.hpp"

#include <span>
#include <string>
#include <vector>

namespace bralt {

/// Area under the budget curve: trapezoid rule over x = |L| / budget,
/// divided by the covered span of x. A single point returns its accuracy.
double aubc(std::span<const double> budget_fraction, std::span<const double> accuracy);
double aubc(const RunLog& log);

/// Accuracy at the final budget.
double f_acc(const RunLog& log);

/// Accuracy at the first record with |L| >= labeled_count (last record if none).
double accuracy_at(const RunLog& log, std::size_t labeled_count);

struct MeanInterval {
  double mean = 0.0;
  /// Half-width of the two-sided 95% t interval; 0 for a single value.
  double half_width = 0.0;
};

MeanInterval mean_interval(std::span<const double> values);

/// Accuracy grid acc[method][benchmark][budget].
using AccuracyGrid = std::vector<std::vector<std::vector<double>>>;

/// P[i][j] counts the (benchmark, budget) cells where method i's accuracy
/// strictly exceeds method j's. Diagonal is zero.
std::vector<std::vector<int>> penalty_matrix(const AccuracyGrid& acc);

/// runs[method][benchmark] -> accuracy at each budget (|L| values).
std::vector<std::vector<int>> penalty_matrix(const std::vector<std::vector<RunLog>>& runs,
                                             std::span<const std::size_t> budgets);

}  // namespace bralt
