#include "bralt/al_loop.hpp"

#include "bralt/errors.hpp"
#include "bralt/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bralt {

namespace {

std::vector<SampleId> pick_ids(std::span<const SampleId> ids, const std::vector<std::size_t>& rows) {
  std::vector<SampleId> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(ids[r]);
  return out;
}

std::vector<SampleId> select_random(const SelectionContext& ctx) {
  std::vector<SampleId> pool(ctx.view.unlabeled().begin(), ctx.view.unlabeled().end());
  Rng rng(ctx.seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(ctx.count);
  return pool;
}

template <typename ScoreFn>
std::vector<SampleId> select_by_uncertainty(const SelectionContext& ctx, ScoreFn score) {
  const FeatureTable pool = ctx.view.features(ctx.view.unlabeled());
  const Eigen::MatrixXd probs = predict_proba(ctx.model, pool.features);
  std::vector<double> scores(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    scores[i] = score(Eigen::VectorXd(probs.row(static_cast<Eigen::Index>(i)).transpose()));
  return pick_ids(pool.ids, top_scores_seeded(scores, ctx.count, ctx.seed));
}

std::vector<SampleId> select_coreset(const SelectionContext& ctx) {
  const FeatureTable labeled = ctx.view.features(ctx.view.labeled());
  const FeatureTable pool = ctx.view.features(ctx.view.unlabeled());
  const auto rows =
      k_center_greedy(features(ctx.model, labeled.features), features(ctx.model, pool.features), ctx.count);
  return pick_ids(pool.ids, rows);
}

std::vector<SampleId> select_pseudoscore(const SelectionContext& ctx) {
  const FeatureTable pool = ctx.view.features(ctx.view.unlabeled());
  const Eigen::MatrixXd probs = predict_proba(ctx.model, pool.features);
  std::vector<std::size_t> rows(pool.size());
  std::vector<double> scores(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Eigen::VectorXd p = probs.row(static_cast<Eigen::Index>(i)).transpose();
    scores[i] = el2n_from_probs(p, argmax(p));
  }
  std::iota(rows.begin(), rows.end(), 0);
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  rows.resize(ctx.count);
  return pick_ids(pool.ids, rows);
}

std::vector<SampleId> select_gradnd_oracle(const SelectionContext& ctx) {
  const FeatureTable pool = ctx.view.features(ctx.view.unlabeled());
  const auto labels = ctx.view.labels(pool.ids);
  const int C = ctx.view.num_classes();
  const std::vector<ModelParams> ensemble{ctx.model};
  const auto scores = cl_scores(ensemble, pool, labels, ctx.config.trustset.use_curriculum, ctx.config.superloss(C));
  return balanced_top(pool.ids, labels, scores, C, ctx.count, false).ids;
}

enum class TrustMode { best, second_best };

std::vector<SampleId> select_bralt(const SelectionContext& ctx, TrustMode mode, bool use_curriculum) {
  const int C = ctx.view.num_classes();
  const FeatureTable labeled = ctx.view.features(ctx.view.labeled());
  const auto labels = ctx.view.labels(labeled.ids);
  const std::vector<ModelParams> ensemble{ctx.model};
  TrustSetConfig ts_cfg = ctx.config.trustset;
  ts_cfg.use_curriculum = use_curriculum;
  const SuperLossConfig sl = ctx.config.superloss(C);
  const TrustSet trust = mode == TrustMode::best ? extract_trustset(labeled, labels, C, ensemble, ts_cfg, sl)
                                                 : second_best_trustset(labeled, labels, C, ensemble, ts_cfg, sl);

  std::vector<std::size_t> labeled_counts(static_cast<std::size_t>(C), 0);
  for (int y : labels) ++labeled_counts[static_cast<std::size_t>(y)];
  ctx.diagnostics["trustset_size"] = static_cast<double>(trust.ids.size());
  ctx.diagnostics["trustset_cv"] = coefficient_of_variation(trust.per_class_counts);
  ctx.diagnostics["labeled_cv"] = coefficient_of_variation(labeled_counts);

  RLConfig rl = ctx.config.rl;
  rl.seed = derive_seed(ctx.seed, stream::kRewardNet);
  ReplayBuffer buffer;
  PolicyTrainingStats train_stats;
  const RewardNet net = train_policy(labeled, trust.ids, ctx.model, ctx.config.cluster, rl, C,
                                     derive_seed(ctx.seed, stream::kEnvPair), buffer, &train_stats);
  ctx.diagnostics["replay_transitions"] = static_cast<double>(train_stats.transitions);
  ctx.diagnostics["empty_envs"] = static_cast<double>(train_stats.empty_envs);
  ctx.diagnostics["reward_batch_mse"] = train_stats.final_batch_mse;

  const FeatureTable pool = ctx.view.features(ctx.view.unlabeled());
  SelectionStats sel_stats;
  auto ids = select_batch(net, labeled, pool, ctx.model, ctx.count, ctx.config.cluster, rl.selection_order, C,
                          derive_seed(ctx.seed, stream::kSelection), &sel_stats);
  ctx.diagnostics["candidate_groups"] = static_cast<double>(sel_stats.groups);
  ctx.diagnostics["groups_taken"] = static_cast<double>(sel_stats.groups_taken);
  return ids;
}

}  // namespace

std::vector<std::string> strategy_names() {
  return {std::string(strategy::kBralt),       std::string(strategy::kRandom),
          std::string(strategy::kEntropy),     std::string(strategy::kMargin),
          std::string(strategy::kCoreSet),     std::string(strategy::kPseudoScore),
          std::string(strategy::kGradNdOracle), std::string(strategy::kDiffSet),
          std::string(strategy::kNoCurriculum)};
}

bool is_known_strategy(std::string_view name) {
  const auto names = strategy_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

bool needs_oracle(std::string_view name) { return name == strategy::kGradNdOracle; }

SelectionStrategy make_strategy(std::string_view name) {
  if (name == strategy::kBralt)
    return [](const SelectionContext& ctx) {
      return select_bralt(ctx, TrustMode::best, ctx.config.trustset.use_curriculum);
    };
  if (name == strategy::kDiffSet)
    return [](const SelectionContext& ctx) {
      return select_bralt(ctx, TrustMode::second_best, ctx.config.trustset.use_curriculum);
    };
  if (name == strategy::kNoCurriculum)
    return [](const SelectionContext& ctx) { return select_bralt(ctx, TrustMode::best, false); };
  if (name == strategy::kRandom) return select_random;
  if (name == strategy::kEntropy)
    return [](const SelectionContext& ctx) { return select_by_uncertainty(ctx, predictive_entropy); };
  if (name == strategy::kMargin)
    return [](const SelectionContext& ctx) {
      return select_by_uncertainty(ctx, [](const Eigen::VectorXd& p) { return -probability_margin(p); });
    };
  if (name == strategy::kCoreSet) return select_coreset;
  if (name == strategy::kPseudoScore) return select_pseudoscore;
  if (name == strategy::kGradNdOracle) return select_gradnd_oracle;
  throw ArgumentError("unknown strategy '" + std::string(name) + "'");
}

std::vector<std::size_t> k_center_greedy(const Eigen::MatrixXd& centers, const Eigen::MatrixXd& candidates,
                                         std::size_t count) {
  const auto n = static_cast<std::size_t>(candidates.rows());
  if (count > n) throw ArgumentError("k-center greedy asked for more points than candidates");
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < centers.rows(); ++c)
      nearest[i] = std::min(nearest[i], (candidates.row(static_cast<Eigen::Index>(i)) - centers.row(c)).norm());
  std::vector<std::size_t> picked;
  std::vector<char> used(n, 0);
  while (picked.size() < count) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!used[i] && (best == n || nearest[i] > nearest[best])) best = i;
    used[best] = 1;
    picked.push_back(best);
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(
          nearest[i], (candidates.row(static_cast<Eigen::Index>(i)) - candidates.row(static_cast<Eigen::Index>(best))).norm());
  }
  return picked;
}

std::vector<std::size_t> top_scores_seeded(std::span<const double> scores, std::size_t count, std::uint64_t seed) {
  if (count > scores.size()) throw ArgumentError("asked for more top scores than available");
  std::vector<std::size_t> priority(scores.size());
  std::iota(priority.begin(), priority.end(), 0);
  Rng rng(seed);
  std::shuffle(priority.begin(), priority.end(), rng);
  std::vector<std::size_t> rows(scores.size());
  std::iota(rows.begin(), rows.end(), 0);
  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return priority[a] < priority[b];
  });
  rows.resize(count);
  return rows;
}

double predictive_entropy(const Eigen::VectorXd& probs) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k)
    if (probs[k] > 0.0) h -= probs[k] * std::log(probs[k]);
  return h;
}

double probability_margin(const Eigen::VectorXd& probs) {
  if (probs.size() < 2) return 1.0;
  double first = -1.0, second = -1.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    if (probs[k] > first) {
      second = first;
      first = probs[k];
    } else if (probs[k] > second) {
      second = probs[k];
    }
  }
  return first - second;
}

}  // namespace bralt
