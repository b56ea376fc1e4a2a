#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace bralt {

/// Uniformly weighted point cloud; one point per row.
class PointCloud {
 public:
  /// Throws ArgumentError for an empty cloud or non-finite coordinates.
  explicit PointCloud(Eigen::MatrixXd points);

  const Eigen::MatrixXd& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  int dim() const noexcept { return static_cast<int>(points_.cols()); }

 private:
  Eigen::MatrixXd points_;
};

/// Pairwise Euclidean distances, a.size() x b.size().
Eigen::MatrixXd euclidean_cost(const PointCloud& a, const PointCloud& b);

/// Optimal assignment for a square cost matrix. Returns the column assigned to each row.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

/// Exact minimum of sum(P .* cost) over couplings with uniform marginals 1/rows and
/// 1/cols. Solved as an integer min-cost flow with supplies cols/g and demands rows/g
/// (g = gcd), so every augmentation is exact.
double transportation_cost(const Eigen::MatrixXd& cost);

/// Exact W1 with Euclidean ground cost: Hungarian for equal sizes, the
/// transportation program otherwise.
double wasserstein(const PointCloud& a, const PointCloud& b);

struct SinkhornResult {
  double cost = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Log-domain Sinkhorn; `cost` is the transport cost of the entropic plan.
/// Converged when the L1 marginal error falls below `tolerance`.
SinkhornResult sinkhorn(const PointCloud& a, const PointCloud& b, double epsilon, int max_iters,
                        double tolerance = 1e-9);

double median_cost(const PointCloud& a, const PointCloud& b);

struct TransportOptions {
  /// Clouds with more points than this on either side use Sinkhorn.
  std::size_t sinkhorn_threshold = 512;
  /// Sinkhorn epsilon as a fraction of the median pairwise cost.
  double sinkhorn_relative_epsilon = 0.01;
  int sinkhorn_max_iters = 5000;

  friend bool operator==(const TransportOptions&, const TransportOptions&) = default;
};

/// Exact below the size threshold, Sinkhorn above.
double ot_distance(const PointCloud& a, const PointCloud& b, const TransportOptions& options = {});

}  // namespace bralt
