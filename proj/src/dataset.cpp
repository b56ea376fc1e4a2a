#include "bralt/dataset.hpp"

#include "bralt/errors.hpp"
#include "bralt/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace bralt {

namespace {

bool sorted_contains(const std::vector<SampleId>& ids, SampleId id) {
  return std::binary_search(ids.begin(), ids.end(), id);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

Dataset::Dataset(std::vector<Sample> samples, int num_classes)
    : samples_(std::move(samples)), num_classes_(num_classes) {
  if (num_classes_ < 1) throw ArgumentError("dataset needs at least one class");
  std::sort(samples_.begin(), samples_.end(),
            [](const Sample& a, const Sample& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (i > 0 && samples_[i - 1].id == s.id)
      throw ArgumentError("duplicate sample id " + std::to_string(s.id));
    if (s.label < 0 || s.label >= num_classes_)
      throw ArgumentError("label " + std::to_string(s.label) + " out of range for sample " +
                          std::to_string(s.id));
    if (i == 0) dim_ = static_cast<int>(s.features.size());
    if (s.features.size() != dim_)
      throw ArgumentError("feature dimension mismatch at sample " + std::to_string(s.id));
  }
}

bool Dataset::contains(SampleId id) const {
  auto it = std::lower_bound(samples_.begin(), samples_.end(), id,
                             [](const Sample& s, SampleId v) { return s.id < v; });
  return it != samples_.end() && it->id == id;
}

const Sample& Dataset::at(SampleId id) const {
  auto it = std::lower_bound(samples_.begin(), samples_.end(), id,
                             [](const Sample& s, SampleId v) { return s.id < v; });
  if (it == samples_.end() || it->id != id)
    throw ArgumentError("unknown sample id " + std::to_string(id));
  return *it;
}

std::vector<SampleId> Dataset::ids() const {
  std::vector<SampleId> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.id);
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes_), 0);
  for (const auto& s : samples_) ++counts[static_cast<std::size_t>(s.label)];
  return counts;
}

std::vector<SampleId> Dataset::ids_of_class(int c) const {
  std::vector<SampleId> out;
  for (const auto& s : samples_)
    if (s.label == c) out.push_back(s.id);
  return out;
}

void Dataset::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.precision(17);
  for (int j = 0; j < dim_; ++j) out << 'f' << j << ',';
  out << "__label__\n";
  for (const auto& s : samples_) {
    for (int j = 0; j < dim_; ++j) out << s.features[j] << ',';
    out << s.label << '\n';
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.num_classes_ != b.num_classes_ || a.dim_ != b.dim_ || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.samples_[i];
    const auto& y = b.samples_[i];
    if (x.id != y.id || x.label != y.label || x.features != y.features) return false;
  }
  return true;
}

Dataset gen_gaussian_mixture(int num_classes, int dim, int per_class_count, double class_sep,
                             std::uint64_t seed) {
  if (num_classes < 2) throw ArgumentError("gaussian mixture needs num_classes >= 2");
  if (dim < 2) throw ArgumentError("gaussian mixture needs dim >= 2");
  if (per_class_count < 2) throw ArgumentError("gaussian mixture needs per_class_count >= 2");
  if (!(class_sep > 0.0) || !std::isfinite(class_sep))
    throw ArgumentError("gaussian mixture needs class_sep > 0");

  const auto C = static_cast<Eigen::Index>(num_classes);
  const auto d = static_cast<Eigen::Index>(dim);
  Rng mean_rng(derive_seed(seed, stream::kMixtureMeans));
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd means(d, C);
  if (d >= C) {
    Eigen::MatrixXd g(d, C);
    for (Eigen::Index j = 0; j < C; ++j)
      for (Eigen::Index i = 0; i < d; ++i) g(i, j) = gauss(mean_rng);
    const Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() *
                                  Eigen::MatrixXd::Identity(d, C);
    // Regular simplex: e_c - centroid has pairwise distance sqrt(2).
    Eigen::MatrixXd simplex = Eigen::MatrixXd::Identity(C, C);
    simplex.array() -= 1.0 / static_cast<double>(C);
    means = basis * simplex * (class_sep / std::sqrt(2.0));
  } else {
    for (Eigen::Index j = 0; j < C; ++j)
      for (Eigen::Index i = 0; i < d; ++i) means(i, j) = gauss(mean_rng);
    double closest = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < C; ++a)
      for (Eigen::Index b = a + 1; b < C; ++b)
        closest = std::min(closest, (means.col(a) - means.col(b)).norm());
    means *= class_sep / closest;
  }

  Rng noise_rng(derive_seed(seed, stream::kMixtureNoise));
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(per_class_count));
  SampleId next_id = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (int k = 0; k < per_class_count; ++k) {
      Sample s;
      s.id = next_id++;
      s.label = c;
      s.features.resize(d);
      for (Eigen::Index i = 0; i < d; ++i) s.features[i] = means(i, c) + gauss(noise_rng);
      samples.push_back(std::move(s));
    }
  }
  return Dataset(std::move(samples), num_classes);
}

std::vector<std::size_t> ImbalanceSpec::target_counts(std::size_t n_max, int num_classes) const {
  const auto C = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> counts(C, n_max);
  switch (kind) {
    case ImbalanceKind::none:
      return counts;
    case ImbalanceKind::linear_ratio: {
      std::vector<double> r = ratios;
      if (r.empty()) {
        r.resize(C);
        std::iota(r.begin(), r.end(), 1.0);
      }
      if (r.size() != C)
        throw ArgumentError("imbalance ratios must have one entry per class (" + std::to_string(C) +
                            "), got " + std::to_string(r.size()));
      const double top = *std::max_element(r.begin(), r.end());
      for (double v : r)
        if (!(v > 0.0)) throw ArgumentError("imbalance ratios must be positive");
      for (std::size_t c = 0; c < C; ++c)
        counts[c] = static_cast<std::size_t>(std::llround(static_cast<double>(n_max) * r[c] / top));
      break;
    }
    case ImbalanceKind::exponential_longtail: {
      if (!(factor >= 1.0)) throw ArgumentError("long-tail factor must be >= 1");
      for (std::size_t c = 0; c < C; ++c) {
        const double exponent = C > 1 ? -static_cast<double>(c) / static_cast<double>(C - 1) : 0.0;
        counts[c] = static_cast<std::size_t>(
            std::llround(static_cast<double>(n_max) * std::pow(factor, exponent)));
      }
      break;
    }
  }
  for (std::size_t c = 0; c < C; ++c)
    if (counts[c] < 1)
      throw ArgumentError("imbalance leaves class " + std::to_string(c) + " empty");
  return counts;
}

Dataset apply_imbalance(const Dataset& dataset, const ImbalanceSpec& spec, std::uint64_t seed) {
  if (spec.kind == ImbalanceKind::none) return dataset;
  const auto have = dataset.class_counts();
  const std::size_t n_max = *std::max_element(have.begin(), have.end());
  const auto want = spec.target_counts(n_max, dataset.num_classes());

  std::vector<Sample> kept;
  for (int c = 0; c < dataset.num_classes(); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    if (want[cu] > have[cu])
      throw ArgumentError("class " + std::to_string(c) + " has " + std::to_string(have[cu]) +
                          " samples, imbalance wants " + std::to_string(want[cu]));
    auto ids = dataset.ids_of_class(c);
    Rng rng(derive_seed(seed, stream::kImbalance, cu));
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(want[cu]);
    for (SampleId id : ids) kept.push_back(dataset.at(id));
  }
  return Dataset(std::move(kept), dataset.num_classes());
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file " + path.string(), 1);
  const auto header = split_row(line);
  std::ptrdiff_t label_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == label_column) label_idx = static_cast<std::ptrdiff_t>(i);
  if (label_idx < 0) throw FormatError("label column '" + label_column + "' not in header", 1);
  if (header.size() < 2) throw FormatError("no feature columns", 1);

  std::map<std::string, int, std::less<>> label_map;
  std::vector<Sample> samples;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size())
      throw FormatError("expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(cells.size()),
                        row);
    Sample s;
    s.id = static_cast<SampleId>(samples.size());
    s.features.resize(static_cast<Eigen::Index>(header.size() - 1));
    Eigen::Index j = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (static_cast<std::ptrdiff_t>(i) == label_idx) {
        auto [it, inserted] =
            label_map.try_emplace(std::string(cells[i]), static_cast<int>(label_map.size()));
        s.label = it->second;
        continue;
      }
      double v = 0.0;
      const auto cell = cells[i];
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || end != cell.data() + cell.size() || cell.empty())
        throw FormatError("non-numeric value '" + std::string(cell) + "' in column '" +
                              std::string(header[i]) + "'",
                          row);
      s.features[j++] = v;
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw FormatError("no data rows in " + path.string());
  return Dataset(std::move(samples), static_cast<int>(label_map.size()));
}

std::vector<SampleId> DatasetSplit::train_pool() const {
  std::vector<SampleId> pool;
  pool.reserve(labeled.size() + unlabeled.size());
  std::merge(labeled.begin(), labeled.end(), unlabeled.begin(), unlabeled.end(),
             std::back_inserter(pool));
  return pool;
}

DatasetSplit init_split(std::shared_ptr<const Dataset> dataset, std::size_t initial_labeled,
                        double test_fraction, std::uint64_t seed, const InitPolicy& policy) {
  if (!dataset || dataset->empty()) throw ArgumentError("init_split needs a non-empty dataset");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ArgumentError("test_fraction must be in [0, 1)");
  const Dataset& data = *dataset;
  const int C = data.num_classes();
  const std::size_t n = data.size();
  const auto test_total =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (initial_labeled + test_total > n)
    throw ArgumentError("initial labeled set of " + std::to_string(initial_labeled) +
                        " does not fit beside a test set of " + std::to_string(test_total) +
                        " in " + std::to_string(n) + " samples");

  // Stratified quotas by largest remainder.
  const auto counts = data.class_counts();
  std::vector<std::size_t> quota(counts.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double exact = static_cast<double>(test_total) * static_cast<double>(counts[c]) /
                         static_cast<double>(n);
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(-(exact - std::floor(exact)), c);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t k = 0; assigned < test_total; ++k, ++assigned) ++quota[remainders[k].second];

  DatasetSplit split;
  split.data = dataset;
  std::vector<SampleId> rest;
  for (int c = 0; c < C; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    auto ids = data.ids_of_class(c);
    Rng rng(derive_seed(seed, stream::kTestSplit, cu));
    std::shuffle(ids.begin(), ids.end(), rng);
    split.test.insert(split.test.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(quota[cu]));
    rest.insert(rest.end(), ids.begin() + static_cast<std::ptrdiff_t>(quota[cu]), ids.end());
  }
  std::sort(split.test.begin(), split.test.end());
  std::sort(rest.begin(), rest.end());

  Rng rng(derive_seed(seed, stream::kInitialLabeled));
  if (policy.kind == InitKind::random) {
    std::vector<SampleId> shuffled = rest;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    split.labeled.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(initial_labeled));
  } else {
    if (policy.rare_count + policy.main_count != initial_labeled)
      throw ArgumentError("twisted init draws rare_count + main_count = " +
                          std::to_string(policy.rare_count + policy.main_count) +
                          " samples but initial_labeled is " + std::to_string(initial_labeled));
    std::vector<std::size_t> pool_counts(static_cast<std::size_t>(C), 0);
    for (SampleId id : rest) ++pool_counts[static_cast<std::size_t>(data.at(id).label)];
    std::vector<int> order(static_cast<std::size_t>(C));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return pool_counts[static_cast<std::size_t>(a)] < pool_counts[static_cast<std::size_t>(b)];
    });
    std::vector<bool> is_rare(static_cast<std::size_t>(C), false);
    for (int k = 0; k < C / 2; ++k) is_rare[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;

    std::vector<SampleId> rare_pool, main_pool;
    for (SampleId id : rest)
      (is_rare[static_cast<std::size_t>(data.at(id).label)] ? rare_pool : main_pool).push_back(id);
    if (policy.rare_count > rare_pool.size() || policy.main_count > main_pool.size())
      throw ArgumentError("twisted init asks for " + std::to_string(policy.rare_count) + " rare / " +
                          std::to_string(policy.main_count) + " main samples, pool has " +
                          std::to_string(rare_pool.size()) + " / " + std::to_string(main_pool.size()));
    std::shuffle(rare_pool.begin(), rare_pool.end(), rng);
    std::shuffle(main_pool.begin(), main_pool.end(), rng);
    split.labeled.assign(rare_pool.begin(), rare_pool.begin() + static_cast<std::ptrdiff_t>(policy.rare_count));
    split.labeled.insert(split.labeled.end(), main_pool.begin(),
                         main_pool.begin() + static_cast<std::ptrdiff_t>(policy.main_count));
  }
  std::sort(split.labeled.begin(), split.labeled.end());
  std::set_difference(rest.begin(), rest.end(), split.labeled.begin(), split.labeled.end(),
                      std::back_inserter(split.unlabeled));
  return split;
}

DatasetSplit reveal_labels(const DatasetSplit& split, std::span<const SampleId> ids) {
  std::vector<SampleId> sorted(ids.begin(), ids.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1])
      throw ArgumentError("sample " + std::to_string(sorted[i]) + " revealed twice");
    if (!sorted_contains(split.unlabeled, sorted[i]))
      throw ArgumentError("sample " + std::to_string(sorted[i]) + " is not in the unlabeled pool");
  }
  DatasetSplit next;
  next.data = split.data;
  next.test = split.test;
  std::merge(split.labeled.begin(), split.labeled.end(), sorted.begin(), sorted.end(),
             std::back_inserter(next.labeled));
  std::set_difference(split.unlabeled.begin(), split.unlabeled.end(), sorted.begin(), sorted.end(),
                      std::back_inserter(next.unlabeled));
  return next;
}

std::size_t FeatureTable::row_of(SampleId id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw ArgumentError("sample " + std::to_string(id) + " not in feature table");
  return static_cast<std::size_t>(it - ids.begin());
}

FeatureTable FeatureTable::subset(std::span<const SampleId> subset_ids) const {
  std::map<SampleId, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  FeatureTable out;
  out.ids.assign(subset_ids.begin(), subset_ids.end());
  out.features.resize(static_cast<Eigen::Index>(subset_ids.size()), features.cols());
  for (std::size_t i = 0; i < subset_ids.size(); ++i) {
    const auto it = index.find(subset_ids[i]);
    if (it == index.end())
      throw ArgumentError("sample " + std::to_string(subset_ids[i]) + " not in feature table");
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(it->second));
  }
  return out;
}

FeatureTable gather_features(const Dataset& dataset, std::span<const SampleId> ids) {
  FeatureTable out;
  out.ids.assign(ids.begin(), ids.end());
  out.features.resize(static_cast<Eigen::Index>(ids.size()), dataset.dim());
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.features.row(static_cast<Eigen::Index>(i)) = dataset.at(ids[i]).features.transpose();
  return out;
}

std::vector<int> gather_labels(const Dataset& dataset, std::span<const SampleId> ids) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (SampleId id : ids) out.push_back(dataset.at(id).label);
  return out;
}

SplitView::SplitView(const DatasetSplit& split, bool oracle_access)
    : split_(&split), oracle_(oracle_access) {
  if (!split.data) throw ArgumentError("split has no dataset");
}

const Eigen::VectorXd& SplitView::features(SampleId id) const {
  if (sorted_contains(split_->test, id))
    throw ArgumentError("sample " + std::to_string(id) + " belongs to the test set");
  return split_->data->at(id).features;
}

FeatureTable SplitView::features(std::span<const SampleId> ids) const {
  for (SampleId id : ids) (void)features(id);
  return gather_features(*split_->data, ids);
}

int SplitView::label(SampleId id) const {
  if (sorted_contains(split_->labeled, id)) return split_->data->at(id).label;
  if (sorted_contains(split_->unlabeled, id)) {
    ++unlabeled_reads_;
    if (!oracle_)
      throw ArgumentError("label of unlabeled sample " + std::to_string(id) +
                          " requested without oracle access");
    return split_->data->at(id).label;
  }
  throw ArgumentError("sample " + std::to_string(id) + " is not in the train pool");
}

std::vector<int> SplitView::labels(std::span<const SampleId> ids) const {
  std::vector<int> out;
  out.reserve(ids.size());
  for (SampleId id : ids) out.push_back(label(id));
  return out;
}

}  // namespace bralt
