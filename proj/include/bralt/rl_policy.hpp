#pragma once

#include "bralt/clustering.hpp"
#include "bralt/dataset.hpp"
#include "bralt/learner.hpp"
#include "bralt/reward_net.hpp"
#include "bralt/transport.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bralt {

enum class SelectionOrder { global, per_cluster_round_robin };

struct RLConfig {
  int n_env_pairs = 30;
  double env_labeled_fraction = 0.2;
  int steps_per_pair = 20;
  int batch_size = 100;
  double learning_rate = 0.01;
  std::vector<int> hidden{512, 512};
  SelectionOrder selection_order = SelectionOrder::global;
  TransportOptions transport{};
  std::uint64_t seed = 0;

  friend bool operator==(const RLConfig&, const RLConfig&) = default;
};

/// One single-step experience. state = [E L*_c, Var L*_c, E U_c, Var U_c],
/// action = [E group, Var group], reward = -W1(group, T_c).
struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
};

class ReplayBuffer {
 public:
  void add(Transition t) { transitions_.push_back(std::move(t)); }
  void append(std::vector<Transition> ts);
  void clear() noexcept { transitions_.clear(); }
  std::size_t size() const noexcept { return transitions_.size(); }
  bool empty() const noexcept { return transitions_.empty(); }
  const std::vector<Transition>& transitions() const noexcept { return transitions_; }

  /// Rows are state||action.
  Eigen::MatrixXd inputs() const;
  Eigen::VectorXd rewards() const;

  /// Columns s0..,a0..,reward.
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<Transition> transitions_;
};

Eigen::VectorXd state_vector(const Cluster& nearest_labeled, const Cluster& u_cluster);
Eigen::VectorXd action_vector(const Cluster& group);
Eigen::VectorXd concat(const Eigen::VectorXd& state, const Eigen::VectorXd& action);

/// Resolved cluster counts: 0 in the config means "number of classes".
int resolved_labeled_k(const ClusterConfig& cfg, int num_classes);
int resolved_unlabeled_k(const ClusterConfig& cfg, int num_classes);

/// One simulated environment drawn from the labeled set.
///
/// `labeled` holds input-space rows of L; features come from `params`. L is
/// split at random into a small labeled part and a larger unlabeled part, both
/// are clustered (k capped at their sizes), and every action group of every
/// unlabeled cluster with a non-empty TrustSet intersection yields a transition.
std::vector<Transition> build_env_transitions(const FeatureTable& labeled, std::span<const SampleId> trustset_ids,
                                              const ModelParams& params, const ClusterConfig& cluster_cfg,
                                              const RLConfig& rl_cfg, int num_classes, std::uint64_t pair_seed);

/// n_env_pairs * steps_per_pair SGD steps on batches drawn from a fixed buffer.
RewardNet train_reward_net(RewardNet net, const ReplayBuffer& buffer, const RLConfig& rl_cfg);

struct PolicyTrainingStats {
  std::size_t transitions = 0;
  std::size_t empty_envs = 0;
  double final_batch_mse = 0.0;
};

/// Clears `buffer` and fills it from n_env_pairs simulated environments. The
/// net's standardization is fitted on the full buffer; then, for each pair j
/// in order, steps_per_pair SGD steps sample from the transitions of pairs
/// 0..j. Throws NumericError if no env produced a transition.
RewardNet train_policy(const FeatureTable& labeled, std::span<const SampleId> trustset_ids,
                       const ModelParams& params, const ClusterConfig& cluster_cfg, const RLConfig& rl_cfg,
                       int num_classes, std::uint64_t seed, ReplayBuffer& buffer,
                       PolicyTrainingStats* stats = nullptr);

using RewardFn = std::function<double(const Eigen::VectorXd& state, const Eigen::VectorXd& action)>;

inline double predict_reward(const RewardNet& net, const Eigen::VectorXd& state, const Eigen::VectorXd& action) {
  return net.predict(concat(state, action));
}

struct SelectionStats {
  std::size_t groups = 0;
  std::size_t groups_taken = 0;
};

/// Scores every (state, action group) of the unlabeled pool and fills a batch
/// of `batch` ids in descending predicted reward. The last, partially used
/// group contributes its members nearest to the group centroid first.
std::vector<SampleId> select_batch(const RewardFn& reward, const FeatureTable& labeled,
                                   const FeatureTable& unlabeled, const ModelParams& params, std::size_t batch,
                                   const ClusterConfig& cluster_cfg, SelectionOrder order, int num_classes,
                                   std::uint64_t seed, SelectionStats* stats = nullptr);

std::vector<SampleId> select_batch(const RewardNet& net, const FeatureTable& labeled, const FeatureTable& unlabeled,
                                   const ModelParams& params, std::size_t batch, const ClusterConfig& cluster_cfg,
                                   SelectionOrder order, int num_classes, std::uint64_t seed,
                                   SelectionStats* stats = nullptr);

}  // namespace bralt
