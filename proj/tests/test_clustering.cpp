#include <doctest.h>

#include "bralt/clustering.hpp"
#include "bralt/errors.hpp"
#include "bralt/random.hpp"

#include <algorithm>
#include <set>

using namespace bralt;

namespace {

FeatureTable random_table(Rng& rng, int n, int d, SampleId first_id = 0) {
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureTable t;
  t.features.resize(n, d);
  for (int i = 0; i < n; ++i) {
    t.ids.push_back(first_id + 2 * i);
    for (int j = 0; j < d; ++j) t.features(i, j) = g(rng);
  }
  return t;
}

std::vector<SampleId> all_members(const std::vector<Cluster>& clusters) {
  std::vector<SampleId> out;
  for (const auto& c : clusters) out.insert(out.end(), c.member_ids.begin(), c.member_ids.end());
  std::sort(out.begin(), out.end());
  return out;
}

Cluster whole(const FeatureTable& t) {
  Cluster c;
  c.member_ids = t.ids;
  fill_stats(c, t);
  c.centroid = c.mean;
  return c;
}

}  // namespace

TEST_CASE("k equal to n gives singletons") {
  Rng rng(1);
  const FeatureTable t = random_table(rng, 9, 3);
  const KMeansResult r = kmeans(t, 9, 4, 100, 1e-9);
  REQUIRE(r.clusters.size() == 9);
  for (const auto& c : r.clusters) {
    CHECK(c.member_ids.size() == 1);
    CHECK(c.var.norm() == 0.0);
  }
  CHECK(r.objective_trace.back() == doctest::Approx(0.0));
}

TEST_CASE("separated blobs are recovered") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureTable t = random_table(rng, 60, 4);
    std::vector<int> blob(60);
    for (int i = 0; i < 60; ++i) {
      blob[static_cast<std::size_t>(i)] = i % 2;
      if (i % 2) t.features.row(i).array() += 20.0;
    }
    const KMeansResult r = kmeans(t, 2, static_cast<std::uint64_t>(trial), 100, 1e-9);
    for (const auto& c : r.clusters) {
      std::set<int> seen;
      for (SampleId id : c.member_ids) seen.insert(blob[static_cast<std::size_t>(t.row_of(id))]);
      CHECK(seen.size() == 1);
      CHECK(c.member_ids.size() == 30);
    }
  }
}

TEST_CASE("lloyd objective never increases") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const FeatureTable t = random_table(rng, 80, 3);
    const KMeansResult r = kmeans(t, 6, static_cast<std::uint64_t>(trial), 100, 1e-12);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
      CHECK(r.objective_trace[i] <= r.objective_trace[i - 1] + 1e-9);
  }
}

TEST_CASE("kmeans partitions the input and is deterministic") {
  Rng rng(4);
  std::uniform_int_distribution<int> size(1, 50), kk(1, 8);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = size(rng);
    const int k = std::min(n, kk(rng));
    const FeatureTable t = random_table(rng, n, 2, 1000);
    const KMeansResult a = kmeans(t, k, 99, 50, 1e-8);
    const KMeansResult b = kmeans(t, k, 99, 50, 1e-8);
    CHECK(static_cast<int>(a.clusters.size()) == k);
    CHECK(all_members(a.clusters) == t.ids);
    for (const auto& c : a.clusters) CHECK(!c.member_ids.empty());
    REQUIRE(a.clusters.size() == b.clusters.size());
    for (std::size_t c = 0; c < a.clusters.size(); ++c) {
      CHECK(a.clusters[c].member_ids == b.clusters[c].member_ids);
      CHECK(a.clusters[c].centroid == b.clusters[c].centroid);
    }
  }
}

TEST_CASE("duplicate points still give non-empty clusters") {
  FeatureTable t;
  t.ids = {0, 1, 2, 3, 4};
  t.features = Eigen::MatrixXd::Zero(5, 2);
  t.features(4, 0) = 1.0;
  const KMeansResult r = kmeans(t, 3, 0, 20, 1e-9);
  CHECK(all_members(r.clusters) == t.ids);
  for (const auto& c : r.clusters) CHECK(!c.member_ids.empty());
}

TEST_CASE("kmeans errors") {
  Rng rng(5);
  const FeatureTable t = random_table(rng, 3, 2);
  CHECK_THROWS_AS(kmeans(t, 4, 0, 10, 1e-6), ArgumentError);
  CHECK_THROWS_AS(kmeans(t, 0, 0, 10, 1e-6), ArgumentError);
}

TEST_CASE("cluster statistics") {
  SUBCASE("single member has zero variance") {
    Eigen::MatrixXd one(1, 3);
    one << 1.0, -2.0, 5.0;
    const auto [mean, var] = cluster_stats(one);
    CHECK(mean == one.row(0).transpose());
    CHECK(var.isZero());
  }
  SUBCASE("two members closed form") {
    Eigen::MatrixXd two(2, 2);
    two << 1.0, 4.0, 3.0, -2.0;
    const auto [mean, var] = cluster_stats(two);
    CHECK(mean[0] == doctest::Approx(2.0));
    CHECK(mean[1] == doctest::Approx(1.0));
    CHECK(var[0] == doctest::Approx(1.0));
    CHECK(var[1] == doctest::Approx(9.0));
  }
  SUBCASE("two-pass oracle") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
      const FeatureTable t = random_table(rng, 5, 4);
      const auto [mean, var] = cluster_stats(t.features);
      for (int j = 0; j < 4; ++j) {
        double m = 0.0;
        for (int i = 0; i < 5; ++i) m += t.features(i, j);
        m /= 5;
        double v = 0.0;
        for (int i = 0; i < 5; ++i) v += (t.features(i, j) - m) * (t.features(i, j) - m);
        v /= 5;
        CHECK(std::abs(mean[j] - m) <= 1e-10);
        CHECK(std::abs(var[j] - v) <= 1e-10);
      }
    }
  }
  CHECK_THROWS_AS(cluster_stats(Eigen::MatrixXd(0, 2)), ArgumentError);
}

TEST_CASE("nearest labeled cluster") {
  Rng rng(7);
  SUBCASE("a single candidate is always chosen") {
    const FeatureTable u = random_table(rng, 4, 2);
    FeatureTable l = random_table(rng, 3, 2, 500);
    l.features.array() += 100.0;
    const std::vector<Cluster> labeled{whole(l)};
    CHECK(nearest_labeled_cluster(whole(u), u, labeled, l, 256, 0) == 0);
  }
  SUBCASE("an identical cloud wins") {
    const FeatureTable u = random_table(rng, 5, 3);
    FeatureTable l = random_table(rng, 10, 3, 100);
    FeatureTable same = u;
    for (auto& id : same.ids) id += 1000;
    // labeled table holds a shifted cloud, then an exact copy of u
    FeatureTable l_all;
    l_all.ids = l.ids;
    l_all.ids.insert(l_all.ids.end(), same.ids.begin(), same.ids.end());
    l_all.features.resize(15, 3);
    l_all.features << l.features, same.features;
    Cluster far, copy;
    far.member_ids = l.ids;
    copy.member_ids = same.ids;
    std::vector<double> d;
    const std::vector<Cluster> labeled{far, copy};
    CHECK(nearest_labeled_cluster(whole(u), u, labeled, l_all, 256, 0, &d) == 1);
    CHECK(d[1] <= 1e-12);
  }
  SUBCASE("three candidates against brute force") {
    for (int trial = 0; trial < 30; ++trial) {
      const FeatureTable u = random_table(rng, 4, 2);
      FeatureTable l = random_table(rng, 9, 2, 100);
      std::uniform_real_distribution<double> shift(-2.0, 2.0);
      std::vector<Cluster> labeled(3);
      for (int i = 0; i < 9; ++i) {
        labeled[static_cast<std::size_t>(i % 3)].member_ids.push_back(l.ids[static_cast<std::size_t>(i)]);
        l.features(i, 0) += (i % 3) * shift(rng);
      }
      std::size_t want = 0;
      double best = 1e300;
      for (std::size_t m = 0; m < 3; ++m) {
        const double dist = wasserstein(PointCloud(l.subset(labeled[m].member_ids).features), PointCloud(u.features));
        if (dist < best) {
          best = dist;
          want = m;
        }
      }
      CHECK(nearest_labeled_cluster(whole(u), u, labeled, l, 256, 3) == want);
    }
  }
  SUBCASE("ties go to the lowest index") {
    const FeatureTable u = random_table(rng, 3, 2);
    FeatureTable l = u;
    for (auto& id : l.ids) id += 50;
    Cluster a;
    a.member_ids = l.ids;
    const std::vector<Cluster> labeled{a, a, a};
    CHECK(nearest_labeled_cluster(whole(u), u, labeled, l, 256, 0) == 0);
  }
  CHECK_THROWS_AS(nearest_labeled_cluster(Cluster{}, FeatureTable{}, {}, FeatureTable{}, 256, 0), ArgumentError);
}

TEST_CASE("member cloud subsampling") {
  Rng rng(8);
  const FeatureTable t = random_table(rng, 40, 2);
  const Cluster c = whole(t);
  CHECK(member_cloud(c, t, 256, 0).size() == 40);
  const PointCloud small = member_cloud(c, t, 10, 5);
  CHECK(small.size() == 10);
  CHECK(member_cloud(c, t, 10, 5).points() == small.points());
}

TEST_CASE("action groups") {
  Rng rng(9);
  SUBCASE("few members become singletons") {
    const FeatureTable t = random_table(rng, 4, 3);
    const auto groups = action_groups(whole(t), t, 5, 1);
    CHECK(groups.size() == 4);
    for (const auto& g : groups) CHECK(g.member_ids.size() == 1);
  }
  SUBCASE("groups partition the cluster") {
    const FeatureTable t = random_table(rng, 37, 3, 10);
    const auto groups = action_groups(whole(t), t, 5, 2);
    CHECK(groups.size() == 5);
    CHECK(all_members(groups) == t.ids);
  }
  SUBCASE("only the cluster's members are used") {
    const FeatureTable t = random_table(rng, 20, 2);
    Cluster part;
    part.member_ids.assign(t.ids.begin(), t.ids.begin() + 7);
    const auto groups = action_groups(part, t, 3, 2);
    CHECK(all_members(groups) == part.member_ids);
  }
  const FeatureTable t = random_table(rng, 3, 2);
  CHECK_THROWS_AS(action_groups(whole(t), t, 0, 1), ArgumentError);
}
