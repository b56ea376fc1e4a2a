#include "bralt/al_loop.hpp"

#include "bralt/errors.hpp"
#include "bralt/random.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace bralt {

SuperLossConfig ALConfig::superloss(int num_classes) const {
  SuperLossConfig sl = SuperLossConfig::for_classes(num_classes, superloss_lambda);
  if (superloss_tau) sl.tau = *superloss_tau;
  return sl;
}

namespace {

void validate(const Dataset& data, const ALConfig& cfg) {
  if (cfg.batch == 0) throw ArgumentError("batch must be at least 1");
  if (cfg.initial_labeled == 0) throw ArgumentError("initial labeled set must be non-empty");
  if (cfg.budget < cfg.initial_labeled)
    throw ArgumentError("budget " + std::to_string(cfg.budget) + " is below the initial labeled size " +
                        std::to_string(cfg.initial_labeled));
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
    throw ArgumentError("test fraction must lie in (0, 1)");
  const auto pool = data.size() - static_cast<std::size_t>(std::llround(cfg.test_fraction * data.size()));
  if (cfg.budget > pool)
    throw ArgumentError("budget " + std::to_string(cfg.budget) + " exceeds the train pool of about " +
                        std::to_string(pool) + " samples");
}

}  // namespace

RunLog run(std::shared_ptr<const Dataset> dataset, const ALConfig& config) {
  if (!dataset) throw ArgumentError("run needs a dataset");
  validate(*dataset, config);
  const int C = dataset->num_classes();
  const SelectionStrategy select = make_strategy(config.strategy);
  const bool oracle = needs_oracle(config.strategy);

  DatasetSplit split = init_split(dataset, config.initial_labeled, config.test_fraction, config.seed, config.init);
  if (config.budget > split.train_pool().size())
    throw ArgumentError("budget exceeds the train pool (" + std::to_string(split.train_pool().size()) + ")");
  const FeatureTable test = gather_features(*dataset, split.test);
  const auto test_labels = gather_labels(*dataset, split.test);

  TrainConfig train_cfg = config.learner;
  train_cfg.superloss = config.superloss(C);

  RunLog log;
  log.strategy = config.strategy;
  log.seed = config.seed;
  log.budget = config.budget;

  for (int iteration = 0;; ++iteration) {
    const auto t0 = std::chrono::steady_clock::now();
    const FeatureTable labeled = gather_features(*dataset, split.labeled);
    const auto labels = gather_labels(*dataset, split.labeled);
    train_cfg.seed = derive_seed(config.seed, stream::kLearner, static_cast<std::uint64_t>(iteration));
    log.final_model = train_from_scratch(labeled.features, labels, C, train_cfg);

    IterationRecord rec;
    rec.iteration = iteration;
    rec.labeled_count = split.labeled.size();
    rec.accuracy = accuracy(log.final_model, test.features, test_labels);

    const bool done = split.labeled.size() >= config.budget || split.unlabeled.empty();
    std::vector<SampleId> picked;
    if (!done) {
      const std::size_t count = std::min({config.batch, config.budget - split.labeled.size(), split.unlabeled.size()});
      const SplitView view(split, oracle);
      const SelectionContext ctx{view,  log.final_model,
                                 config, count,
                                 derive_seed(config.seed, stream::kSelection, static_cast<std::uint64_t>(iteration)),
                                 rec.diagnostics};
      picked = select(ctx);
      if (picked.size() != count)
        throw NumericError("strategy '" + config.strategy + "' returned " + std::to_string(picked.size()) +
                           " ids, expected " + std::to_string(count));
      rec.diagnostics["unlabeled_label_reads"] = static_cast<double>(view.unlabeled_label_reads());
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.records.push_back(std::move(rec));
    if (done) break;
    split = reveal_labels(split, picked);
  }
  return log;
}

RunLog run_baseline(std::string_view strategy, std::shared_ptr<const Dataset> dataset, const ALConfig& config) {
  ALConfig cfg = config;
  cfg.strategy = std::string(strategy);
  return run(std::move(dataset), cfg);
}

}  // namespace bralt
