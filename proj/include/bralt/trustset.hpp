#pragma once

#include "bralt/dataset.hpp"
#include "bralt/learner.hpp"
#include "bralt/superloss.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <span>
#include <vector>

namespace bralt {

struct TrustSetConfig {
  /// Target size b_T; 0 means ceil(|L| / 2).
  std::size_t size = 0;
  bool use_curriculum = true;
  int ensemble_size = 1;

  std::size_t resolved_size(std::size_t labeled_count) const {
    return size > 0 ? size : (labeled_count + 1) / 2;
  }
  friend bool operator==(const TrustSetConfig&, const TrustSetConfig&) = default;
};

struct TrustSet {
  /// Per-class picks in class order (best first), then redistributed picks in score order.
  std::vector<SampleId> ids;
  std::vector<std::size_t> per_class_counts;
  std::map<SampleId, double> scores;
};

/// |softmax(x) - onehot(y)|_2 averaged over the ensemble. In [0, sqrt(2)].
double el2n_score(std::span<const ModelParams> ensemble, const Eigen::VectorXd& x, int label);

/// EL2N against a probability vector directly.
double el2n_from_probs(const Eigen::VectorXd& probs, int label);

/// sigma*(mean cross-entropy) * EL2N with the curriculum on, EL2N alone otherwise.
double cl_score(std::span<const ModelParams> ensemble, const Eigen::VectorXd& x, int label,
                bool use_curriculum, const SuperLossConfig& sl_cfg);

/// Scores for every row of `samples` (labels aligned with rows).
std::vector<double> cl_scores(std::span<const ModelParams> ensemble, const FeatureTable& samples,
                              std::span<const int> labels, bool use_curriculum, const SuperLossConfig& sl_cfg);

/// Per-class quotas floor(b_T / C), remainder to the lowest class indices.
std::vector<std::size_t> class_quotas(std::size_t size, int num_classes);

/// Class-balanced top-score selection over precomputed scores. With `skip_top`,
/// each class first skips its top quota (the second-best group). Deficits are
/// filled from the remaining samples in global score order (score descending,
/// id ascending), samples skipped as top picks last.
TrustSet balanced_top(std::span<const SampleId> ids, std::span<const int> labels,
                      std::span<const double> scores, int num_classes, std::size_t size, bool skip_top);

TrustSet extract_trustset(const FeatureTable& labeled, std::span<const int> labels, int num_classes,
                          std::span<const ModelParams> ensemble, const TrustSetConfig& cfg,
                          const SuperLossConfig& sl_cfg);

/// The next-best quota per class; disjoint from extract_trustset when every
/// class holds at least twice its quota.
TrustSet second_best_trustset(const FeatureTable& labeled, std::span<const int> labels, int num_classes,
                              std::span<const ModelParams> ensemble, const TrustSetConfig& cfg,
                              const SuperLossConfig& sl_cfg);

/// Population coefficient of variation (std / mean); 0 for an all-zero vector.
double coefficient_of_variation(std::span<const std::size_t> counts);

/// CSV columns: id,class,score,rank (rank is the position in `ids`).
void write_trustset_csv(const TrustSet& trustset, const Dataset& dataset, const std::filesystem::path& path);

}  // namespace bralt
