#include "bralt/clustering.hpp"

#include "bralt/errors.hpp"
#include "bralt/random.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace bralt {

namespace {

std::size_t nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::RowVectorXd& x, double* dist2) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  if (dist2 != nullptr) *dist2 = best_d;
  return best;
}

Eigen::MatrixXd plus_plus_seeding(const Eigen::MatrixXd& X, int k, Rng& rng) {
  const auto n = static_cast<std::size_t>(X.rows());
  Eigen::MatrixXd centroids(k, X.cols());
  std::vector<char> chosen(n, 0);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  chosen[pick] = 1;
  centroids.row(0) = X.row(static_cast<Eigen::Index>(pick));

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (X.row(static_cast<Eigen::Index>(i)) - centroids.row(0)).squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double running = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        running += d2[i];
        pick = i;
        if (running > target) break;
      }
    } else {
      // Every remaining point coincides with a centroid.
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
    }
    chosen[pick] = 1;
    centroids.row(c) = X.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (X.row(static_cast<Eigen::Index>(i)) - centroids.row(c)).squaredNorm());
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const FeatureTable& points, int k, std::uint64_t seed, int max_iter, double tol) {
  const auto n = points.size();
  if (k < 1) throw ArgumentError("kmeans needs k >= 1");
  if (static_cast<std::size_t>(k) > n)
    throw ArgumentError("kmeans with k = " + std::to_string(k) + " on " + std::to_string(n) + " points");
  if (max_iter < 1) throw ArgumentError("kmeans needs max_iter >= 1");
  const Eigen::MatrixXd& X = points.features;

  Rng rng(seed);
  Eigen::MatrixXd centroids = plus_plus_seeding(X, k, rng);
  std::vector<std::size_t> assign(n, 0);
  std::vector<double> dist2(n, 0.0);
  KMeansResult result;
  const auto K = static_cast<std::size_t>(k);

  for (int it = 0; it < max_iter; ++it) {
    std::vector<std::size_t> sizes(K, 0);
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = nearest_centroid(centroids, X.row(static_cast<Eigen::Index>(i)), &dist2[i]);
      ++sizes[assign[i]];
    }
    for (std::size_t c = 0; c < K; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (sizes[assign[i]] > 1 && (far == n || dist2[i] > dist2[far])) far = i;
      --sizes[assign[far]];
      assign[far] = c;
      dist2[far] = 0.0;
      sizes[c] = 1;
      centroids.row(static_cast<Eigen::Index>(c)) = X.row(static_cast<Eigen::Index>(far));
    }
    result.objective_trace.push_back(std::accumulate(dist2.begin(), dist2.end(), 0.0));

    Eigen::MatrixXd updated = Eigen::MatrixXd::Zero(k, X.cols());
    for (std::size_t i = 0; i < n; ++i) updated.row(static_cast<Eigen::Index>(assign[i])) += X.row(static_cast<Eigen::Index>(i));
    for (std::size_t c = 0; c < K; ++c) updated.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(sizes[c]);
    const double shift = (updated - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(updated);
    result.iterations = it + 1;
    if (shift < tol) break;
  }

  result.clusters.resize(K);
  for (std::size_t i = 0; i < n; ++i) result.clusters[assign[i]].member_ids.push_back(points.ids[i]);
  for (std::size_t c = 0; c < K; ++c) {
    auto& cluster = result.clusters[c];
    cluster.centroid = centroids.row(static_cast<Eigen::Index>(c)).transpose();
    fill_stats(cluster, points);
  }
  return result;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> cluster_stats(const Eigen::MatrixXd& members) {
  if (members.rows() == 0) throw ArgumentError("cluster statistics need at least one member");
  const Eigen::VectorXd mean = members.colwise().mean().transpose();
  const Eigen::MatrixXd centered = members.rowwise() - mean.transpose();
  const Eigen::VectorXd var = centered.array().square().colwise().mean().transpose();
  return {mean, var};
}

void fill_stats(Cluster& cluster, const FeatureTable& table) {
  auto [mean, var] = cluster_stats(table.subset(cluster.member_ids).features);
  cluster.mean = std::move(mean);
  cluster.var = std::move(var);
}

PointCloud member_cloud(const Cluster& cluster, const FeatureTable& table, std::size_t max_points,
                        std::uint64_t seed) {
  std::vector<SampleId> ids = cluster.member_ids;
  if (max_points > 0 && ids.size() > max_points) {
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(max_points);
    std::sort(order.begin(), order.end());
    std::vector<SampleId> kept;
    kept.reserve(max_points);
    for (auto k : order) kept.push_back(ids[k]);
    ids = std::move(kept);
  }
  return PointCloud(table.subset(ids).features);
}

std::size_t nearest_labeled_cluster(const Cluster& u_cluster, const FeatureTable& u_table,
                                    std::span<const Cluster> labeled_clusters, const FeatureTable& l_table,
                                    std::size_t max_points, std::uint64_t seed, std::vector<double>* distances) {
  if (labeled_clusters.empty()) throw ArgumentError("no labeled clusters to match against");
  const PointCloud u_cloud = member_cloud(u_cluster, u_table, max_points, derive_seed(seed, 0));
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  if (distances != nullptr) distances->clear();
  for (std::size_t m = 0; m < labeled_clusters.size(); ++m) {
    const PointCloud l_cloud = member_cloud(labeled_clusters[m], l_table, max_points, derive_seed(seed, m + 1));
    const double d = wasserstein(l_cloud, u_cloud);
    if (distances != nullptr) distances->push_back(d);
    if (d < best_d) {
      best_d = d;
      best = m;
    }
  }
  return best;
}

std::vector<Cluster> action_groups(const Cluster& u_cluster, const FeatureTable& table, int actions,
                                   std::uint64_t seed, int max_iter, double tol) {
  if (actions < 1) throw ArgumentError("actions_per_cluster must be >= 1");
  const FeatureTable members = table.subset(u_cluster.member_ids);
  const int k = std::min<int>(actions, static_cast<int>(members.size()));
  return kmeans(members, k, seed, max_iter, tol).clusters;
}

}  // namespace bralt
