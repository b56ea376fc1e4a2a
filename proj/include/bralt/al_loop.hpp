#pragma once

#include "bralt/clustering.hpp"
#include "bralt/dataset.hpp"
#include "bralt/learner.hpp"
#include "bralt/rl_policy.hpp"
#include "bralt/superloss.hpp"
#include "bralt/trustset.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bralt {

namespace strategy {
inline constexpr std::string_view kBralt = "bralt";
inline constexpr std::string_view kRandom = "random";
inline constexpr std::string_view kEntropy = "entropy";
inline constexpr std::string_view kMargin = "margin";
inline constexpr std::string_view kCoreSet = "coreset";
inline constexpr std::string_view kPseudoScore = "pseudoscore";
inline constexpr std::string_view kGradNdOracle = "gradnd-oracle";
inline constexpr std::string_view kDiffSet = "diffset";
inline constexpr std::string_view kNoCurriculum = "no-cl";
}  // namespace strategy

/// Every strategy name accepted by run().
std::vector<std::string> strategy_names();
bool is_known_strategy(std::string_view name);
/// Whether the strategy reads labels of the unlabeled pool.
bool needs_oracle(std::string_view name);

struct ALConfig {
  std::size_t initial_labeled = 50;
  std::size_t budget = 300;
  std::size_t batch = 25;
  double test_fraction = 0.2;
  InitPolicy init{};
  TrainConfig learner{};
  TrustSetConfig trustset{};
  /// tau defaults to log(C) when unset.
  std::optional<double> superloss_tau;
  double superloss_lambda = 1.0;
  ClusterConfig cluster{};
  RLConfig rl{};
  std::string strategy{strategy::kBralt};
  std::uint64_t seed = 0;

  SuperLossConfig superloss(int num_classes) const;

  friend bool operator==(const ALConfig&, const ALConfig&) = default;
};

struct IterationRecord {
  int iteration = 0;
  std::size_t labeled_count = 0;
  double accuracy = 0.0;
  double seconds = 0.0;
  std::map<std::string, double> diagnostics;
};

struct RunLog {
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::vector<IterationRecord> records;
  ModelParams final_model;
};

/// Inputs handed to a selection rule for one iteration.
struct SelectionContext {
  const SplitView& view;
  const ModelParams& model;
  const ALConfig& config;
  std::size_t count;
  std::uint64_t seed;
  std::map<std::string, double>& diagnostics;
};

using SelectionStrategy = std::function<std::vector<SampleId>(const SelectionContext&)>;

/// Throws ArgumentError for an unknown name.
SelectionStrategy make_strategy(std::string_view name);

/// Active-learning loop: train from scratch on L, record test accuracy, select
/// min(batch, budget - |L|) ids with the configured strategy, reveal, repeat
/// until |L| reaches the budget.
RunLog run(std::shared_ptr<const Dataset> dataset, const ALConfig& config);

/// run() with `strategy` in place of config.strategy.
RunLog run_baseline(std::string_view strategy, std::shared_ptr<const Dataset> dataset, const ALConfig& config);

// Exposed selection rules.

/// Greedy k-center: repeatedly add the unlabeled point farthest from all
/// current centers (L plus picks); lowest row on ties. Rows are feature vectors.
std::vector<std::size_t> k_center_greedy(const Eigen::MatrixXd& centers, const Eigen::MatrixXd& candidates,
                                         std::size_t count);

/// Indices of the `count` largest scores; ties ordered by a seeded random priority.
std::vector<std::size_t> top_scores_seeded(std::span<const double> scores, std::size_t count, std::uint64_t seed);

double predictive_entropy(const Eigen::VectorXd& probs);
/// Gap between the two largest probabilities.
double probability_margin(const Eigen::VectorXd& probs);

}  // namespace bralt
