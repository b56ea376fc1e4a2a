#include "bralt/rl_policy.hpp"

#include "bralt/errors.hpp"
#include "bralt/random.hpp"
#include "bralt/transport.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>

namespace bralt {

namespace {

FeatureTable to_feature_space(const ModelParams& params, const FeatureTable& table) {
  return {table.ids, features(params, table.features)};
}

std::vector<std::size_t> sample_batch(std::size_t n, std::size_t batch, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(batch);
  if (n >= batch) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < batch; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(idx[k], idx[pick(rng)]);
      out.push_back(idx[k]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t k = 0; k < batch; ++k) out.push_back(pick(rng));
  }
  return out;
}

void run_steps(RewardNet& net, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& rewards, int steps,
               const RLConfig& cfg, Rng& rng, double* last_loss) {
  const auto n = static_cast<std::size_t>(inputs.rows());
  Eigen::MatrixXd xb(cfg.batch_size, inputs.cols());
  Eigen::VectorXd yb(cfg.batch_size);
  for (int s = 0; s < steps; ++s) {
    const auto idx = sample_batch(n, static_cast<std::size_t>(cfg.batch_size), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      xb.row(static_cast<Eigen::Index>(k)) = inputs.row(static_cast<Eigen::Index>(idx[k]));
      yb[static_cast<Eigen::Index>(k)] = rewards[static_cast<Eigen::Index>(idx[k])];
    }
    const double loss = net.sgd_step(xb, yb, cfg.learning_rate);
    if (last_loss != nullptr) *last_loss = loss;
  }
}

void check_rl_config(const RLConfig& cfg) {
  if (cfg.n_env_pairs < 1) throw ArgumentError("n_env_pairs must be >= 1");
  if (!(cfg.env_labeled_fraction > 0.0 && cfg.env_labeled_fraction < 1.0))
    throw ArgumentError("env_labeled_fraction must lie in (0, 1)");
  if (cfg.steps_per_pair < 0) throw ArgumentError("steps_per_pair must be >= 0");
  if (cfg.batch_size < 1) throw ArgumentError("RL batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ArgumentError("RL learning_rate must be > 0");
}

std::vector<SampleId> by_distance_to_centroid(const Cluster& group, const FeatureTable& table) {
  const FeatureTable members = table.subset(group.member_ids);
  std::vector<std::pair<double, SampleId>> keyed;
  keyed.reserve(members.size());
  for (std::size_t i = 0; i < members.size(); ++i)
    keyed.emplace_back((members.features.row(static_cast<Eigen::Index>(i)).transpose() - group.centroid).squaredNorm(),
                       members.ids[i]);
  std::sort(keyed.begin(), keyed.end());
  std::vector<SampleId> out;
  out.reserve(keyed.size());
  for (const auto& [d, id] : keyed) out.push_back(id);
  return out;
}

}  // namespace

void ReplayBuffer::append(std::vector<Transition> ts) {
  for (auto& t : ts) transitions_.push_back(std::move(t));
}

Eigen::MatrixXd ReplayBuffer::inputs() const {
  if (transitions_.empty()) return {};
  const auto s = transitions_.front().state.size();
  const auto a = transitions_.front().action.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(transitions_.size()), s + a);
  for (std::size_t i = 0; i < transitions_.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)).head(s) = transitions_[i].state.transpose();
    out.row(static_cast<Eigen::Index>(i)).tail(a) = transitions_[i].action.transpose();
  }
  return out;
}

Eigen::VectorXd ReplayBuffer::rewards() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(transitions_.size()));
  for (std::size_t i = 0; i < transitions_.size(); ++i) out[static_cast<Eigen::Index>(i)] = transitions_[i].reward;
  return out;
}

void ReplayBuffer::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.precision(17);
  if (transitions_.empty()) {
    out << "reward\n";
    return;
  }
  for (Eigen::Index k = 0; k < transitions_.front().state.size(); ++k) out << 's' << k << ',';
  for (Eigen::Index k = 0; k < transitions_.front().action.size(); ++k) out << 'a' << k << ',';
  out << "reward\n";
  for (const auto& t : transitions_) {
    for (Eigen::Index k = 0; k < t.state.size(); ++k) out << t.state[k] << ',';
    for (Eigen::Index k = 0; k < t.action.size(); ++k) out << t.action[k] << ',';
    out << t.reward << '\n';
  }
}

Eigen::VectorXd state_vector(const Cluster& nearest_labeled, const Cluster& u_cluster) {
  const auto d = nearest_labeled.mean.size();
  Eigen::VectorXd s(4 * d);
  s << nearest_labeled.mean, nearest_labeled.var, u_cluster.mean, u_cluster.var;
  return s;
}

Eigen::VectorXd action_vector(const Cluster& group) {
  Eigen::VectorXd a(2 * group.mean.size());
  a << group.mean, group.var;
  return a;
}

Eigen::VectorXd concat(const Eigen::VectorXd& state, const Eigen::VectorXd& action) {
  Eigen::VectorXd x(state.size() + action.size());
  x << state, action;
  return x;
}

int resolved_labeled_k(const ClusterConfig& cfg, int num_classes) {
  return cfg.labeled_k > 0 ? cfg.labeled_k : num_classes;
}

int resolved_unlabeled_k(const ClusterConfig& cfg, int num_classes) {
  return cfg.unlabeled_k > 0 ? cfg.unlabeled_k : num_classes;
}

std::vector<Transition> build_env_transitions(const FeatureTable& labeled, std::span<const SampleId> trustset_ids,
                                              const ModelParams& params, const ClusterConfig& cluster_cfg,
                                              const RLConfig& rl_cfg, int num_classes, std::uint64_t pair_seed) {
  check_rl_config(rl_cfg);
  if (trustset_ids.empty()) throw ArgumentError("environment needs a non-empty TrustSet");
  const std::size_t n = labeled.size();
  const auto n_small = static_cast<std::size_t>(std::llround(rl_cfg.env_labeled_fraction * static_cast<double>(n)));
  if (n_small == 0 || n_small >= n)
    throw ArgumentError("environment split of " + std::to_string(n) + " labeled samples leaves one side empty");

  std::vector<SampleId> ids = labeled.ids;
  Rng rng(derive_seed(pair_seed, 0));
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<SampleId> env_l(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_small));
  std::vector<SampleId> env_u(ids.begin() + static_cast<std::ptrdiff_t>(n_small), ids.end());
  std::sort(env_l.begin(), env_l.end());
  std::sort(env_u.begin(), env_u.end());

  const FeatureTable lf = to_feature_space(params, labeled.subset(env_l));
  const FeatureTable uf = to_feature_space(params, labeled.subset(env_u));
  const int kl = std::min<int>(resolved_labeled_k(cluster_cfg, num_classes), static_cast<int>(lf.size()));
  const int ku = std::min<int>(resolved_unlabeled_k(cluster_cfg, num_classes), static_cast<int>(uf.size()));
  const auto l_clusters = kmeans(lf, kl, derive_seed(pair_seed, 1), cluster_cfg.max_iter, cluster_cfg.tol).clusters;
  const auto u_clusters = kmeans(uf, ku, derive_seed(pair_seed, 2), cluster_cfg.max_iter, cluster_cfg.tol).clusters;

  std::vector<SampleId> trust(trustset_ids.begin(), trustset_ids.end());
  std::sort(trust.begin(), trust.end());

  std::vector<Transition> out;
  for (std::size_t c = 0; c < u_clusters.size(); ++c) {
    const Cluster& uc = u_clusters[c];
    std::vector<SampleId> members = uc.member_ids;
    std::sort(members.begin(), members.end());
    std::vector<SampleId> tc;
    std::set_intersection(members.begin(), members.end(), trust.begin(), trust.end(), std::back_inserter(tc));
    if (tc.empty()) continue;

    const std::size_t nearest = nearest_labeled_cluster(uc, uf, l_clusters, lf, cluster_cfg.match_subsample,
                                                        derive_seed(pair_seed, 3, c));
    const Eigen::VectorXd state = state_vector(l_clusters[nearest], uc);
    const PointCloud target(uf.subset(tc).features);
    const auto groups = action_groups(uc, uf, cluster_cfg.actions_per_cluster, derive_seed(pair_seed, 4, c),
                                      cluster_cfg.max_iter, cluster_cfg.tol);
    for (const auto& g : groups) {
      const PointCloud group_cloud(uf.subset(g.member_ids).features);
      out.push_back({state, action_vector(g), -ot_distance(group_cloud, target, rl_cfg.transport)});
    }
  }
  return out;
}

RewardNet train_reward_net(RewardNet net, const ReplayBuffer& buffer, const RLConfig& rl_cfg) {
  check_rl_config(rl_cfg);
  if (buffer.empty()) throw ArgumentError("cannot train the reward net on an empty replay buffer");
  Rng rng(derive_seed(rl_cfg.seed, stream::kRewardNet));
  run_steps(net, buffer.inputs(), buffer.rewards(), rl_cfg.n_env_pairs * rl_cfg.steps_per_pair, rl_cfg, rng,
            nullptr);
  return net;
}

RewardNet train_policy(const FeatureTable& labeled, std::span<const SampleId> trustset_ids,
                       const ModelParams& params, const ClusterConfig& cluster_cfg, const RLConfig& rl_cfg,
                       int num_classes, std::uint64_t seed, ReplayBuffer& buffer, PolicyTrainingStats* stats) {
  check_rl_config(rl_cfg);
  buffer.clear();
  Rng batch_rng(derive_seed(seed, stream::kRewardNet, 1));
  PolicyTrainingStats local;
  // Environments never look at the net, so build them all up front; the
  // standardization is then fitted once on the whole buffer and the SGD steps
  // of pair j only see transitions from pairs 0..j.
  std::vector<std::size_t> prefix;
  for (int j = 0; j < rl_cfg.n_env_pairs; ++j) {
    auto ts = build_env_transitions(labeled, trustset_ids, params, cluster_cfg, rl_cfg, num_classes,
                                    derive_seed(seed, stream::kEnvPair, static_cast<std::uint64_t>(j)));
    if (ts.empty()) ++local.empty_envs;
    buffer.append(std::move(ts));
    prefix.push_back(buffer.size());
  }
  if (buffer.empty()) throw NumericError("no simulated environment produced a transition");
  const Eigen::MatrixXd inputs = buffer.inputs();
  const Eigen::VectorXd rewards = buffer.rewards();
  RewardNet net(inputs, rewards, rl_cfg.hidden, derive_seed(seed, stream::kRewardNet, 0));
  for (std::size_t n : prefix) {
    if (n == 0) continue;
    const auto rows = static_cast<Eigen::Index>(n);
    run_steps(net, inputs.topRows(rows), rewards.head(rows), rl_cfg.steps_per_pair, rl_cfg, batch_rng,
              &local.final_batch_mse);
  }
  local.transitions = buffer.size();
  if (stats != nullptr) *stats = local;
  return net;
}

std::vector<SampleId> select_batch(const RewardFn& reward, const FeatureTable& labeled,
                                   const FeatureTable& unlabeled, const ModelParams& params, std::size_t batch,
                                   const ClusterConfig& cluster_cfg, SelectionOrder order, int num_classes,
                                   std::uint64_t seed, SelectionStats* stats) {
  if (batch > unlabeled.size())
    throw ArgumentError("batch of " + std::to_string(batch) + " exceeds the unlabeled pool of " +
                        std::to_string(unlabeled.size()));
  if (batch == 0) return {};
  if (labeled.size() == 0) throw ArgumentError("selection needs a non-empty labeled set");

  const FeatureTable lf = to_feature_space(params, labeled);
  const FeatureTable uf = to_feature_space(params, unlabeled);
  const int kl = std::min<int>(resolved_labeled_k(cluster_cfg, num_classes), static_cast<int>(lf.size()));
  const int ku = std::min<int>(resolved_unlabeled_k(cluster_cfg, num_classes), static_cast<int>(uf.size()));
  const auto l_clusters = kmeans(lf, kl, derive_seed(seed, 1), cluster_cfg.max_iter, cluster_cfg.tol).clusters;
  const auto u_clusters = kmeans(uf, ku, derive_seed(seed, 2), cluster_cfg.max_iter, cluster_cfg.tol).clusters;

  struct Candidate {
    double score;
    std::size_t cluster;
    std::size_t group;
    Cluster members;
  };
  std::vector<std::vector<Candidate>> per_cluster(u_clusters.size());
  for (std::size_t c = 0; c < u_clusters.size(); ++c) {
    const Cluster& uc = u_clusters[c];
    const std::size_t nearest =
        nearest_labeled_cluster(uc, uf, l_clusters, lf, cluster_cfg.match_subsample, derive_seed(seed, 3, c));
    const Eigen::VectorXd state = state_vector(l_clusters[nearest], uc);
    auto groups = action_groups(uc, uf, cluster_cfg.actions_per_cluster, derive_seed(seed, 4, c),
                                cluster_cfg.max_iter, cluster_cfg.tol);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const double score = reward(state, action_vector(groups[g]));
      if (!std::isfinite(score)) throw NumericError("reward model produced a non-finite score");
      per_cluster[c].push_back({score, c, g, std::move(groups[g])});
    }
  }

  const auto better = [](const Candidate* a, const Candidate* b) {
    if (a->score != b->score) return a->score > b->score;
    if (a->cluster != b->cluster) return a->cluster < b->cluster;
    return a->group < b->group;
  };
  std::vector<const Candidate*> ranked;
  if (order == SelectionOrder::global) {
    for (const auto& list : per_cluster)
      for (const auto& cand : list) ranked.push_back(&cand);
    std::sort(ranked.begin(), ranked.end(), better);
  } else {
    std::vector<std::vector<const Candidate*>> sorted(per_cluster.size());
    std::size_t rounds = 0;
    for (std::size_t c = 0; c < per_cluster.size(); ++c) {
      for (const auto& cand : per_cluster[c]) sorted[c].push_back(&cand);
      std::sort(sorted[c].begin(), sorted[c].end(), better);
      rounds = std::max(rounds, sorted[c].size());
    }
    // round r holds the r-th best group of every cluster, best first
    for (std::size_t r = 0; r < rounds; ++r) {
      const auto begin = ranked.size();
      for (const auto& list : sorted)
        if (r < list.size()) ranked.push_back(list[r]);
      std::sort(ranked.begin() + static_cast<std::ptrdiff_t>(begin), ranked.end(), better);
    }
  }

  std::vector<SampleId> picked;
  picked.reserve(batch);
  SelectionStats local;
  local.groups = ranked.size();
  for (const Candidate* cand : ranked) {
    if (picked.size() == batch) break;
    const auto members = by_distance_to_centroid(cand->members, uf);
    const std::size_t take = std::min(members.size(), batch - picked.size());
    picked.insert(picked.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    ++local.groups_taken;
  }
  if (stats != nullptr) *stats = local;
  return picked;
}

std::vector<SampleId> select_batch(const RewardNet& net, const FeatureTable& labeled, const FeatureTable& unlabeled,
                                   const ModelParams& params, std::size_t batch, const ClusterConfig& cluster_cfg,
                                   SelectionOrder order, int num_classes, std::uint64_t seed, SelectionStats* stats) {
  const RewardFn fn = [&net](const Eigen::VectorXd& s, const Eigen::VectorXd& a) { return predict_reward(net, s, a); };
  return select_batch(fn, labeled, unlabeled, params, batch, cluster_cfg, order, num_classes, seed, stats);
}

}  // namespace bralt
