#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bralt {

using SampleId = std::int64_t;

struct Sample {
  SampleId id = 0;
  Eigen::VectorXd features;
  int label = 0;
};

/// Immutable collection of labeled samples, ordered by id.
class Dataset {
 public:
  Dataset() = default;
  /// Validates uniform dimension, label range and id uniqueness; sorts by id.
  Dataset(std::vector<Sample> samples, int num_classes);

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  int num_classes() const noexcept { return num_classes_; }
  int dim() const noexcept { return dim_; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }

  bool contains(SampleId id) const;
  /// Throws ArgumentError for an unknown id.
  const Sample& at(SampleId id) const;

  std::vector<SampleId> ids() const;
  std::vector<std::size_t> class_counts() const;
  /// Ids of class `c`, ascending.
  std::vector<SampleId> ids_of_class(int c) const;

  /// Header `f0,...,f{d-1},__label__`, one row per sample in id order.
  void write_csv(const std::filesystem::path& path) const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  std::vector<Sample> samples_;
  int num_classes_ = 0;
  int dim_ = 0;
};

/// Isotropic unit-variance Gaussian mixture. Class means sit on a regular simplex
/// with edge length `class_sep`, rotated into R^dim by a seeded orthonormal map
/// (dim >= C); for dim < C the means are random directions rescaled so the
/// closest pair is `class_sep` apart. Ids are 0..C*n-1 in class-major order.
Dataset gen_gaussian_mixture(int num_classes, int dim, int per_class_count, double class_sep,
                             std::uint64_t seed);

enum class ImbalanceKind { none, linear_ratio, exponential_longtail };

struct ImbalanceSpec {
  ImbalanceKind kind = ImbalanceKind::none;
  /// Per-class ratios for linear_ratio; empty means 1:2:...:C.
  std::vector<double> ratios;
  /// Decay factor for exponential_longtail: count_c = round(n_max * f^(-c/(C-1))).
  double factor = 10.0;

  /// Target count per class given the largest class count `n_max`.
  std::vector<std::size_t> target_counts(std::size_t n_max, int num_classes) const;

  friend bool operator==(const ImbalanceSpec&, const ImbalanceSpec&) = default;
};

/// Subsamples each class uniformly (seeded) down to its target count.
Dataset apply_imbalance(const Dataset& dataset, const ImbalanceSpec& spec, std::uint64_t seed);

/// Reads a rectangular numeric CSV with a header row. Feature columns keep file
/// order; labels are mapped to 0..C-1 by first appearance; ids are row indices.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

enum class InitKind { random, twisted_main, twisted_rare };

/// How L0 is drawn from the train pool. The twisted kinds sort classes by pool
/// count, then draw `rare_count` samples from the rarer half and `main_count`
/// from the larger half.
struct InitPolicy {
  InitKind kind = InitKind::random;
  std::size_t rare_count = 50;
  std::size_t main_count = 950;

  static InitPolicy twisted_main(std::size_t rare = 50, std::size_t main = 950) {
    return {InitKind::twisted_main, rare, main};
  }
  static InitPolicy twisted_rare(std::size_t rare = 950, std::size_t main = 50) {
    return {InitKind::twisted_rare, rare, main};
  }
  friend bool operator==(const InitPolicy&, const InitPolicy&) = default;
};

/// The evolving active-learning state. All id lists are sorted ascending.
struct DatasetSplit {
  std::shared_ptr<const Dataset> data;
  std::vector<SampleId> labeled;
  std::vector<SampleId> unlabeled;
  std::vector<SampleId> test;

  /// L and U together.
  std::vector<SampleId> train_pool() const;
};

/// Stratified test split, then L0 drawn from the remainder per `policy`; U0 is the rest.
DatasetSplit init_split(std::shared_ptr<const Dataset> dataset, std::size_t initial_labeled,
                        double test_fraction, std::uint64_t seed, const InitPolicy& policy = {});

/// Moves `ids` from U to L. Throws ArgumentError if any id is not in U or repeats.
DatasetSplit reveal_labels(const DatasetSplit& split, std::span<const SampleId> ids);

/// Rows gathered from a dataset: `features.row(i)` belongs to `ids[i]`.
struct FeatureTable {
  std::vector<SampleId> ids;
  Eigen::MatrixXd features;

  std::size_t size() const noexcept { return ids.size(); }
  /// Row index of `id`; throws ArgumentError when absent.
  std::size_t row_of(SampleId id) const;
  FeatureTable subset(std::span<const SampleId> subset_ids) const;
};

FeatureTable gather_features(const Dataset& dataset, std::span<const SampleId> ids);
std::vector<int> gather_labels(const Dataset& dataset, std::span<const SampleId> ids);

/// What a selection strategy may see of a split. Labels of U are only
/// readable when the view was granted oracle access; every attempted read of
/// an unlabeled sample's label is counted either way.
class SplitView {
 public:
  SplitView(const DatasetSplit& split, bool oracle_access);

  const Dataset& dataset() const noexcept { return *split_->data; }
  int num_classes() const noexcept { return split_->data->num_classes(); }
  std::span<const SampleId> labeled() const noexcept { return split_->labeled; }
  std::span<const SampleId> unlabeled() const noexcept { return split_->unlabeled; }

  const Eigen::VectorXd& features(SampleId id) const;
  FeatureTable features(std::span<const SampleId> ids) const;
  /// Labels of L are always readable. Labels of U throw ArgumentError unless oracle access was granted.
  int label(SampleId id) const;
  std::vector<int> labels(std::span<const SampleId> ids) const;

  bool oracle_access() const noexcept { return oracle_; }
  std::size_t unlabeled_label_reads() const noexcept { return unlabeled_reads_; }

 private:
  const DatasetSplit* split_;
  bool oracle_;
  mutable std::size_t unlabeled_reads_ = 0;
};

}  // namespace bralt
