#pragma once

#include "bralt/dataset.hpp"
#include "bralt/transport.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace bralt {

struct Cluster {
  std::vector<SampleId> member_ids;
  Eigen::VectorXd centroid;
  Eigen::VectorXd mean;
  /// Per-dimension population variance.
  Eigen::VectorXd var;
};

struct ClusterConfig {
  /// M; 0 means "number of classes".
  int labeled_k = 0;
  /// C; 0 means "number of classes".
  int unlabeled_k = 0;
  int actions_per_cluster = 5;
  int max_iter = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  /// Member clouds larger than this are subsampled (seeded) before Wasserstein matching.
  std::size_t match_subsample = 256;

  friend bool operator==(const ClusterConfig&, const ClusterConfig&) = default;
};

struct KMeansResult {
  std::vector<Cluster> clusters;
  /// Sum of squared distances to the assigned centroid after each assignment step.
  std::vector<double> objective_trace;
  int iterations = 0;
};

/// k-means++ seeding then Lloyd iterations until the largest centroid shift is
/// below `tol` or `max_iter` is reached. A cluster left empty takes the point
/// farthest from its own centroid. Clusters are ordered by seeding order.
KMeansResult kmeans(const FeatureTable& points, int k, std::uint64_t seed, int max_iter, double tol);

/// Mean and population variance of the rows of `members`.
std::pair<Eigen::VectorXd, Eigen::VectorXd> cluster_stats(const Eigen::MatrixXd& members);

/// Fills mean/var of `cluster` from `table`.
void fill_stats(Cluster& cluster, const FeatureTable& table);

/// Member features of `cluster` looked up in `table`, at most `max_points` rows
/// (seeded subsample, original order kept).
PointCloud member_cloud(const Cluster& cluster, const FeatureTable& table, std::size_t max_points,
                        std::uint64_t seed);

/// Index of the labeled cluster closest to `u_cluster` in Wasserstein distance,
/// lowest index on ties. Clouds bigger than `max_points` are subsampled.
std::size_t nearest_labeled_cluster(const Cluster& u_cluster, const FeatureTable& u_table,
                                    std::span<const Cluster> labeled_clusters, const FeatureTable& l_table,
                                    std::size_t max_points, std::uint64_t seed,
                                    std::vector<double>* distances = nullptr);

/// k-means inside one cluster with k = min(A_c, |members|).
std::vector<Cluster> action_groups(const Cluster& u_cluster, const FeatureTable& table, int actions,
                                   std::uint64_t seed, int max_iter = 100, double tol = 1e-6);

}  // namespace bralt
