#include "bralt/runlog_io.hpp"

#include "bralt/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bralt {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_field(const std::string& s, std::size_t row, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw FormatError(std::string("bad ") + what + " '" + s + "'", row);
  return v;
}

constexpr const char* kRunlogHeader = "strategy,seed,iteration,labeled_count,budget_fraction,accuracy,seconds";

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw NumericError("cannot format a double");
  return std::string(buf, ptr);
}

void write_runlog_csv(const RunLog& log, const std::filesystem::path& path) {
  if (log.budget == 0) throw ArgumentError("run log has no budget");
  auto out = open_out(path);
  out << kRunlogHeader << '\n';
  for (const auto& r : log.records)
    out << log.strategy << ',' << log.seed << ',' << r.iteration << ',' << r.labeled_count << ','
        << format_double(static_cast<double>(r.labeled_count) / static_cast<double>(log.budget)) << ','
        << format_double(r.accuracy) << ',' << format_double(r.seconds) << '\n';
}

RunLog read_runlog_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRunlogHeader)
    throw FormatError("unexpected run log header in " + path.string(), 1);
  RunLog log;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != 7) throw FormatError("expected 7 fields in " + path.string(), row);
    IterationRecord r;
    const auto seed = parse_field<std::uint64_t>(f[1], row, "seed");
    r.iteration = parse_field<int>(f[2], row, "iteration");
    r.labeled_count = parse_field<std::size_t>(f[3], row, "labeled_count");
    const auto frac = parse_field<double>(f[4], row, "budget_fraction");
    r.accuracy = parse_field<double>(f[5], row, "accuracy");
    r.seconds = parse_field<double>(f[6], row, "seconds");
    if (log.records.empty()) {
      log.strategy = f[0];
      log.seed = seed;
      if (!(frac > 0.0)) throw FormatError("budget_fraction must be positive", row);
      log.budget = static_cast<std::size_t>(std::llround(static_cast<double>(r.labeled_count) / frac));
    } else if (f[0] != log.strategy || seed != log.seed) {
      throw FormatError("mixed strategies or seeds in one run log", row);
    }
    log.records.push_back(std::move(r));
  }
  if (log.records.empty()) throw FormatError("run log " + path.string() + " has no records", row);
  return log;
}

void write_diagnostics_csv(const RunLog& log, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "iteration,key,value\n";
  for (const auto& r : log.records)
    for (const auto& [k, v] : r.diagnostics) out << r.iteration << ',' << k << ',' << format_double(v) << '\n';
}

std::vector<std::vector<RunLog>> group_by_strategy(const std::vector<RunLog>& logs) {
  std::vector<std::vector<RunLog>> groups;
  for (const auto& log : logs) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.front().strategy == log.strategy; });
    if (it == groups.end())
      groups.push_back({log});
    else
      it->push_back(log);
  }
  return groups;
}

StrategySummary summarize(const std::vector<RunLog>& logs) {
  if (logs.empty()) throw ArgumentError("nothing to summarize");
  std::vector<double> a, f;
  for (const auto& log : logs) {
    if (log.strategy != logs.front().strategy) throw ArgumentError("summarize expects a single strategy");
    a.push_back(aubc(log));
    f.push_back(f_acc(log));
  }
  return {logs.front().strategy, logs.size(), mean_interval(a), mean_interval(f)};
}

void write_summary_csv(const std::vector<StrategySummary>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "strategy,seeds,aubc_mean,aubc_half_width,f_acc_mean,f_acc_half_width\n";
  for (const auto& r : rows)
    out << r.strategy << ',' << r.seeds << ',' << format_double(r.aubc.mean) << ','
        << format_double(r.aubc.half_width) << ',' << format_double(r.f_acc.mean) << ','
        << format_double(r.f_acc.half_width) << '\n';
}

void write_curve_csv(const std::vector<RunLog>& logs, const std::filesystem::path& path) {
  if (logs.empty()) throw ArgumentError("no run logs for a curve");
  const auto n = logs.front().records.size();
  for (const auto& log : logs)
    if (log.records.size() != n || log.budget != logs.front().budget)
      throw ArgumentError("run logs of one strategy must share budget and length");
  auto out = open_out(path);
  out << "budget_fraction,mean,half_width\n";
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> acc;
    for (const auto& log : logs) acc.push_back(log.records[i].accuracy);
    const auto ci = mean_interval(acc);
    const double frac =
        static_cast<double>(logs.front().records[i].labeled_count) / static_cast<double>(logs.front().budget);
    out << format_double(frac) << ',' << format_double(ci.mean) << ',' << format_double(ci.half_width) << '\n';
  }
}

void write_penalty_csv(const std::vector<std::string>& methods, const std::vector<std::vector<int>>& P,
                       const std::filesystem::path& path) {
  if (P.size() != methods.size()) throw ArgumentError("penalty matrix size does not match the method list");
  auto out = open_out(path);
  out << "method";
  for (const auto& m : methods) out << ',' << m;
  out << '\n';
  for (std::size_t i = 0; i < P.size(); ++i) {
    out << methods[i];
    for (int v : P[i]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace bralt
