#include "bralt/metrics.hpp"

#include "bralt/errors.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <string>

namespace bralt {

double aubc(std::span<const double> x, std::span<const double> acc) {
  if (x.empty() || x.size() != acc.size()) throw ArgumentError("aubc needs matching, non-empty curves");
  if (x.size() == 1) return acc[0];
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] < x[i - 1]) throw ArgumentError("aubc needs non-decreasing budget fractions");
    area += 0.5 * (acc[i] + acc[i - 1]) * (x[i] - x[i - 1]);
  }
  const double span = x.back() - x.front();
  return span > 0.0 ? area / span : acc.back();
}

double aubc(const RunLog& log) {
  if (log.budget == 0) throw ArgumentError("run log has no budget");
  std::vector<double> x, a;
  for (const auto& r : log.records) {
    x.push_back(static_cast<double>(r.labeled_count) / static_cast<double>(log.budget));
    a.push_back(r.accuracy);
  }
  return aubc(x, a);
}

double f_acc(const RunLog& log) {
  if (log.records.empty()) throw ArgumentError("run log is empty");
  return log.records.back().accuracy;
}

double accuracy_at(const RunLog& log, std::size_t labeled_count) {
  if (log.records.empty()) throw ArgumentError("run log is empty");
  for (const auto& r : log.records)
    if (r.labeled_count >= labeled_count) return r.accuracy;
  return log.records.back().accuracy;
}

MeanInterval mean_interval(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("mean of an empty sample");
  MeanInterval out;
  for (double v : values) out.mean += v;
  const auto n = static_cast<double>(values.size());
  out.mean /= n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  boost::math::students_t dist(n - 1.0);
  out.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(n);
  return out;
}

std::vector<std::vector<int>> penalty_matrix(const AccuracyGrid& acc) {
  const std::size_t M = acc.size();
  std::vector<std::vector<int>> P(M, std::vector<int>(M, 0));
  for (std::size_t i = 0; i < M; ++i) {
    if (acc[i].size() != acc[0].size()) throw ArgumentError("methods disagree on the number of benchmarks");
    for (std::size_t b = 0; b < acc[i].size(); ++b)
      if (acc[i][b].size() != acc[0][b].size()) throw ArgumentError("methods disagree on the budgets");
  }
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      if (i == j) continue;
      for (std::size_t b = 0; b < acc[i].size(); ++b)
        for (std::size_t k = 0; k < acc[i][b].size(); ++k)
          if (acc[i][b][k] > acc[j][b][k]) ++P[i][j];
    }
  return P;
}

std::vector<std::vector<int>> penalty_matrix(const std::vector<std::vector<RunLog>>& runs,
                                             std::span<const std::size_t> budgets) {
  AccuracyGrid acc;
  for (const auto& per_benchmark : runs) {
    std::vector<std::vector<double>> m;
    for (const auto& log : per_benchmark) {
      std::vector<double> row;
      for (auto q : budgets) row.push_back(accuracy_at(log, q));
      m.push_back(std::move(row));
    }
    acc.push_back(std::move(m));
  }
  return penalty_matrix(acc);
}

}  // namespace bralt
