#include "bralt/transport.hpp"

#include "bralt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace bralt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_compatible(const PointCloud& a, const PointCloud& b) {
  if (a.dim() != b.dim())
    throw ArgumentError("point clouds differ in dimension (" + std::to_string(a.dim()) + " vs " +
                        std::to_string(b.dim()) + ")");
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

}  // namespace

PointCloud::PointCloud(Eigen::MatrixXd points) : points_(std::move(points)) {
  if (points_.rows() == 0) throw ArgumentError("point cloud must not be empty");
  if (!points_.allFinite()) throw ArgumentError("point cloud has non-finite coordinates");
}

Eigen::MatrixXd euclidean_cost(const PointCloud& a, const PointCloud& b) {
  check_compatible(a, b);
  const auto n = static_cast<Eigen::Index>(a.size());
  const auto m = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd cost(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) cost(i, j) = (a.points().row(i) - b.points().row(j)).norm();
  return cost;
}

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  if (cost.cols() != cost.rows()) throw ArgumentError("hungarian needs a square cost matrix");
  if (n == 0) return {};
  // Potentials u (rows), v (cols); p[j] = row matched to column j; 1-based with a virtual column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = static_cast<int>(j - 1);
  return assignment;
}

double transportation_cost(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  const auto m = static_cast<std::size_t>(cost.cols());
  if (n == 0 || m == 0) throw ArgumentError("transportation needs a non-empty cost matrix");
  if (!cost.allFinite()) throw ArgumentError("transportation cost matrix has non-finite entries");
  if ((cost.array() < 0.0).any()) throw ArgumentError("transportation costs must be non-negative");

  const std::size_t g = std::gcd(n, m);
  const long long supply = static_cast<long long>(m / g);  // per row node
  const long long demand = static_cast<long long>(n / g);  // per column node
  const long long total = static_cast<long long>(n) * supply;

  // Nodes: 0 = source, 1..n rows, n+1..n+m columns, n+m+1 = sink.
  const std::size_t V = n + m + 2;
  const std::size_t source = 0;
  const std::size_t sink = n + m + 1;
  std::vector<long long> out_source(n, 0), into_sink(m, 0);
  std::vector<long long> flow(n * m, 0);
  std::vector<double> potential(V, 0.0), dist(V);
  std::vector<std::size_t> parent(V);
  std::vector<char> done(V);

  const auto row_node = [](std::size_t i) { return 1 + i; };
  const auto col_node = [n](std::size_t j) { return 1 + n + j; };

  long long shipped = 0;
  while (shipped < total) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(done.begin(), done.end(), 0);
    dist[source] = 0.0;
    const auto relax = [&](std::size_t from, std::size_t to, double edge_cost) {
      const double reduced = std::max(0.0, edge_cost + potential[from] - potential[to]);
      if (dist[from] + reduced < dist[to]) {
        dist[to] = dist[from] + reduced;
        parent[to] = from;
      }
    };
    while (true) {
      std::size_t u = V;
      for (std::size_t k = 0; k < V; ++k)
        if (!done[k] && dist[k] < kInf && (u == V || dist[k] < dist[u])) u = k;
      if (u == V) break;
      done[u] = 1;
      if (u == source) {
        for (std::size_t i = 0; i < n; ++i)
          if (out_source[i] < supply) relax(u, row_node(i), 0.0);
      } else if (u <= n) {
        const std::size_t i = u - 1;
        for (std::size_t j = 0; j < m; ++j)
          relax(u, col_node(j), cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        if (out_source[i] > 0) relax(u, source, 0.0);
      } else if (u < sink) {
        const std::size_t j = u - 1 - n;
        for (std::size_t i = 0; i < n; ++i)
          if (flow[i * m + j] > 0)
            relax(u, row_node(i), -cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        if (into_sink[j] < demand) relax(u, sink, 0.0);
      } else {
        for (std::size_t j = 0; j < m; ++j)
          if (into_sink[j] > 0) relax(u, col_node(j), 0.0);
      }
    }
    if (!(dist[sink] < kInf)) throw NumericError("transportation solver found no augmenting path");

    // Bottleneck along the path, then push.
    long long push = total - shipped;
    for (std::size_t v = sink; v != source; v = parent[v]) {
      const std::size_t u = parent[v];
      if (u == source) push = std::min(push, supply - out_source[v - 1]);
      else if (v == sink) push = std::min(push, demand - into_sink[u - 1 - n]);
      else if (u <= n && v > n) continue;  // row -> column is uncapacitated
      else if (u > n && v <= n && v >= 1) push = std::min(push, flow[(v - 1) * m + (u - 1 - n)]);
      else if (v == source) push = std::min(push, out_source[u - 1]);
      else if (u == sink) push = std::min(push, into_sink[v - 1 - n]);
    }
    for (std::size_t v = sink; v != source; v = parent[v]) {
      const std::size_t u = parent[v];
      if (u == source) out_source[v - 1] += push;
      else if (v == sink) into_sink[u - 1 - n] += push;
      else if (u <= n && v > n) flow[(u - 1) * m + (v - 1 - n)] += push;
      else if (u > n && v <= n && v >= 1) flow[(v - 1) * m + (u - 1 - n)] -= push;
      else if (v == source) out_source[u - 1] -= push;
      else if (u == sink) into_sink[v - 1 - n] -= push;
    }
    shipped += push;
    for (std::size_t k = 0; k < V; ++k) potential[k] += std::min(dist[k], dist[sink]);
  }

  double total_cost = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (flow[i * m + j] > 0)
        total_cost += static_cast<double>(flow[i * m + j]) * cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return total_cost / static_cast<double>(total);
}

double wasserstein(const PointCloud& a, const PointCloud& b) {
  const Eigen::MatrixXd cost = euclidean_cost(a, b);
  if (a.size() == b.size()) {
    const auto assignment = hungarian(cost);
    double total = 0.0;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      total += cost(static_cast<Eigen::Index>(i), assignment[i]);
    return total / static_cast<double>(a.size());
  }
  return transportation_cost(cost);
}

SinkhornResult sinkhorn(const PointCloud& a, const PointCloud& b, double epsilon, int max_iters,
                        double tolerance) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ArgumentError("sinkhorn epsilon must be positive");
  if (max_iters < 1) throw ArgumentError("sinkhorn needs max_iters >= 1");
  const Eigen::MatrixXd cost = euclidean_cost(a, b);
  const auto n = cost.rows();
  const auto m = cost.cols();
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);

  SinkhornResult result;
  Eigen::MatrixXd log_plan(n, m);
  for (int it = 1; it <= max_iters; ++it) {
    for (Eigen::Index i = 0; i < n; ++i)
      f[i] = epsilon * log_a - epsilon * log_sum_exp((g - cost.row(i).transpose()) / epsilon);
    for (Eigen::Index j = 0; j < m; ++j)
      g[j] = epsilon * log_b - epsilon * log_sum_exp((f - cost.col(j)) / epsilon);
    result.iterations = it;
    // After the g update the column marginals are exact; check the rows.
    log_plan = ((-cost).colwise() + f).rowwise() + g.transpose();
    log_plan /= epsilon;
    const Eigen::VectorXd rows = log_plan.array().exp().rowwise().sum();
    const double err = (rows.array() - std::exp(log_a)).abs().sum();
    if (err < tolerance) {
      result.converged = true;
      break;
    }
  }
  result.cost = (log_plan.array().exp() * cost.array()).sum();
  return result;
}

double median_cost(const PointCloud& a, const PointCloud& b) {
  const Eigen::MatrixXd cost = euclidean_cost(a, b);
  std::vector<double> values(cost.data(), cost.data() + cost.size());
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

double ot_distance(const PointCloud& a, const PointCloud& b, const TransportOptions& options) {
  if (std::max(a.size(), b.size()) <= options.sinkhorn_threshold) return wasserstein(a, b);
  const double eps = options.sinkhorn_relative_epsilon * std::max(median_cost(a, b), 1e-12);
  return sinkhorn(a, b, eps, options.sinkhorn_max_iters).cost;
}

}  // namespace bralt
