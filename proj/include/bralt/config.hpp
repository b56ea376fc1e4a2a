#pragma once

#include "bralt/al_loop.hpp"
#include "bralt/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace bralt {

enum class DataSource { gaussian_mixture, csv };

struct DatasetConfig {
  DataSource source = DataSource::gaussian_mixture;
  std::string path;
  std::string label_column = "label";
  int num_classes = 10;
  int dim = 16;
  /// Samples of the largest class before imbalance is applied.
  int per_class = 200;
  double class_sep = 3.0;
  ImbalanceSpec imbalance{};
  std::uint64_t seed = 0;

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct ExperimentConfig {
  DatasetConfig dataset{};
  /// Shared loop settings; `al.strategy` and `al.seed` are set per run.
  ALConfig al{};
  std::vector<std::string> strategies{std::string(strategy::kBralt), std::string(strategy::kRandom)};
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "results";
  /// 0 means the number of available processors.
  int jobs = 0;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses TOML text. Throws ValidationError listing every bad or unknown key.
ExperimentConfig parse_config(std::string_view text, std::string_view source_name = "<config>");
/// Reads and parses a file; a missing file is a ValidationError naming the path.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical TOML with every key written out.
std::string serialize_config(const ExperimentConfig& config);
/// 64-bit FNV-1a of serialize_config().
std::uint64_t config_hash(const ExperimentConfig& config);

/// Semantic checks (ranges, known strategies, ...). Empty when valid.
std::vector<std::string> validate_config(const ExperimentConfig& config);

std::shared_ptr<const Dataset> build_dataset(const DatasetConfig& config);

}  // namespace bralt
