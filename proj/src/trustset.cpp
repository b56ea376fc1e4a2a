#include "bralt/trustset.hpp"

#include "bralt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

namespace bralt {

namespace {

void check_ensemble(std::span<const ModelParams> ensemble) {
  if (ensemble.empty()) throw ArgumentError("scoring needs at least one model");
}

}  // namespace

double el2n_from_probs(const Eigen::VectorXd& probs, int label) {
  if (label < 0 || label >= probs.size())
    throw ArgumentError("EL2N needs a label in range, got " + std::to_string(label));
  Eigen::VectorXd err = probs;
  err[label] -= 1.0;
  return err.norm();
}

double el2n_score(std::span<const ModelParams> ensemble, const Eigen::VectorXd& x, int label) {
  check_ensemble(ensemble);
  double total = 0.0;
  for (const auto& model : ensemble) total += el2n_from_probs(predict_proba(model, x), label);
  return total / static_cast<double>(ensemble.size());
}

double cl_score(std::span<const ModelParams> ensemble, const Eigen::VectorXd& x, int label,
                bool use_curriculum, const SuperLossConfig& sl_cfg) {
  check_ensemble(ensemble);
  double el2n = 0.0;
  double ce = 0.0;
  for (const auto& model : ensemble) {
    const Eigen::VectorXd p = predict_proba(model, x);
    el2n += el2n_from_probs(p, label);
    ce += cross_entropy(p, label);
  }
  const auto e = static_cast<double>(ensemble.size());
  el2n /= e;
  if (!use_curriculum) return el2n;
  return superloss_sigma(ce / e, sl_cfg) * el2n;
}

std::vector<double> cl_scores(std::span<const ModelParams> ensemble, const FeatureTable& samples,
                              std::span<const int> labels, bool use_curriculum, const SuperLossConfig& sl_cfg) {
  check_ensemble(ensemble);
  if (labels.size() != samples.size()) throw ArgumentError("scoring needs one label per sample");
  const auto n = samples.size();
  std::vector<double> el2n(n, 0.0), ce(n, 0.0);
  for (const auto& model : ensemble) {
    const Eigen::MatrixXd probs = predict_proba(model, samples.features);
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::VectorXd p = probs.row(static_cast<Eigen::Index>(i)).transpose();
      el2n[i] += el2n_from_probs(p, labels[i]);
      ce[i] += cross_entropy(p, labels[i]);
    }
  }
  const auto e = static_cast<double>(ensemble.size());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = use_curriculum ? superloss_sigma(ce[i] / e, sl_cfg) * el2n[i] / e : el2n[i] / e;
  return out;
}

std::vector<std::size_t> class_quotas(std::size_t size, int num_classes) {
  const auto C = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> quota(C, size / C);
  for (std::size_t c = 0; c < size % C; ++c) ++quota[c];
  return quota;
}

TrustSet balanced_top(std::span<const SampleId> ids, std::span<const int> labels, std::span<const double> scores,
                      int num_classes, std::size_t size, bool skip_top) {
  if (size == 0) throw ArgumentError("TrustSet size must be positive");
  if (ids.empty()) throw ArgumentError("TrustSet extraction needs a non-empty labeled set");
  if (labels.size() != ids.size() || scores.size() != ids.size())
    throw ArgumentError("ids, labels and scores must align");

  const auto C = static_cast<std::size_t>(num_classes);
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  std::vector<std::vector<std::size_t>> by_class(C);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= C)
      throw ArgumentError("label out of range in TrustSet extraction");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (auto& members : by_class) std::sort(members.begin(), members.end(), better);

  const std::size_t target = std::min(size, ids.size());
  const auto quota = class_quotas(size, num_classes);
  TrustSet out;
  out.per_class_counts.assign(C, 0);
  std::vector<char> taken(ids.size(), 0), skipped(ids.size(), 0);

  for (std::size_t c = 0; c < C; ++c) {
    const auto& members = by_class[c];
    const std::size_t first = skip_top ? std::min(quota[c], members.size()) : 0;
    for (std::size_t k = 0; k < first; ++k) skipped[members[k]] = 1;
    const std::size_t last = std::min(members.size(), first + quota[c]);
    for (std::size_t k = first; k < last; ++k) {
      taken[members[k]] = 1;
      out.ids.push_back(ids[members[k]]);
      ++out.per_class_counts[c];
    }
  }

  if (out.ids.size() < target) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (!taken[i]) rest.push_back(i);
    std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
      if (skipped[a] != skipped[b]) return skipped[a] < skipped[b];
      return better(a, b);
    });
    for (std::size_t k = 0; k < rest.size() && out.ids.size() < target; ++k) {
      out.ids.push_back(ids[rest[k]]);
      ++out.per_class_counts[static_cast<std::size_t>(labels[rest[k]])];
    }
  }
  for (std::size_t i = 0; i < ids.size(); ++i) out.scores.emplace(ids[i], scores[i]);
  return out;
}

TrustSet extract_trustset(const FeatureTable& labeled, std::span<const int> labels, int num_classes,
                          std::span<const ModelParams> ensemble, const TrustSetConfig& cfg,
                          const SuperLossConfig& sl_cfg) {
  if (labeled.size() == 0) throw ArgumentError("TrustSet extraction needs a non-empty labeled set");
  const auto scores = cl_scores(ensemble, labeled, labels, cfg.use_curriculum, sl_cfg);
  return balanced_top(labeled.ids, labels, scores, num_classes, cfg.resolved_size(labeled.size()), false);
}

TrustSet second_best_trustset(const FeatureTable& labeled, std::span<const int> labels, int num_classes,
                              std::span<const ModelParams> ensemble, const TrustSetConfig& cfg,
                              const SuperLossConfig& sl_cfg) {
  if (labeled.size() == 0) throw ArgumentError("TrustSet extraction needs a non-empty labeled set");
  const auto scores = cl_scores(ensemble, labeled, labels, cfg.use_curriculum, sl_cfg);
  return balanced_top(labeled.ids, labels, scores, num_classes, cfg.resolved_size(labeled.size()), true);
}

double coefficient_of_variation(std::span<const std::size_t> counts) {
  if (counts.empty()) return 0.0;
  const auto n = static_cast<double>(counts.size());
  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / n;
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (auto c : counts) var += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
  return std::sqrt(var / n) / mean;
}

void write_trustset_csv(const TrustSet& trustset, const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "id,class,score,rank\n";
  for (std::size_t r = 0; r < trustset.ids.size(); ++r) {
    const SampleId id = trustset.ids[r];
    out << id << ',' << dataset.at(id).label << ',' << trustset.scores.at(id) << ',' << r << '\n';
  }
}

}  // namespace bralt
