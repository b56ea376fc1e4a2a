#include <doctest.h>

#include "bralt/errors.hpp"
#include "bralt/random.hpp"
#include "bralt/superloss.hpp"
#include "bralt/trustset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace bralt;

namespace {

// softmax regression with zero weights: every input gets exactly `probs`
ModelParams constant_model(const Eigen::VectorXd& probs, int dim = 2) {
  ModelParams p;
  p.W2 = Eigen::MatrixXd::Zero(dim, probs.size());
  p.b2 = probs.array().log().matrix();
  return p;
}

// dense log-grid over the clamp box, then golden section around the best cell
double grid_sigma(double loss, const SuperLossConfig& cfg, int points = 2001) {
  const double lo = std::log(kSigmaMin), hi = std::log(kSigmaMax);
  const double step = (hi - lo) / (points - 1);
  const auto g = [&](double t) { return superloss_objective(std::exp(t), loss, cfg); };
  int best = 0;
  for (int i = 1; i < points; ++i)
    if (g(lo + i * step) <= g(lo + best * step)) best = i;
  double a = lo + std::max(0, best - 1) * step, b = lo + std::min(points - 1, best + 1) * step;
  const double phi = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    const double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    if (g(x1) <= g(x2))
      b = x2;
    else
      a = x1;
  }
  const double t = (a + b) / 2;
  // endpoints are candidates too
  double out = std::exp(t);
  for (double e : {kSigmaMin, kSigmaMax})
    if (superloss_objective(e, loss, cfg) < superloss_objective(out, loss, cfg)) out = e;
  return out;
}

struct Fixture {
  FeatureTable table;
  std::vector<int> labels;
  std::vector<double> scores;
};

Fixture random_fixture(std::uint64_t seed, std::vector<int> per_class) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Fixture f;
  SampleId id = 100;
  for (std::size_t c = 0; c < per_class.size(); ++c)
    for (int k = 0; k < per_class[c]; ++k) {
      f.table.ids.push_back(id);
      id += 3;
      f.labels.push_back(static_cast<int>(c));
      f.scores.push_back(u(rng));
    }
  f.table.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(f.table.ids.size()), 2);
  return f;
}

}  // namespace

TEST_CASE("el2n examples") {
  Eigen::VectorXd perfect(3);
  perfect << 0.0, 1.0, 0.0;
  CHECK(el2n_from_probs(perfect, 1) == doctest::Approx(0.0));

  Eigen::VectorXd uniform = Eigen::VectorXd::Constant(10, 0.1);
  CHECK(el2n_from_probs(uniform, 4) == doctest::Approx(std::sqrt(0.9)).epsilon(1e-12));

  Eigen::VectorXd p(3);
  p << 0.2, 0.5, 0.3;
  CHECK(el2n_from_probs(p, 0) == doctest::Approx(std::sqrt(0.64 + 0.25 + 0.09)).epsilon(1e-12));
  CHECK(el2n_from_probs(p, 0) == doctest::Approx(0.98995).epsilon(1e-5));

  // through a model
  const ModelParams m = constant_model(p);
  const std::vector<ModelParams> ens{m};
  CHECK(el2n_score(ens, Eigen::Vector2d(1.0, -2.0), 0) == doctest::Approx(0.98995).epsilon(1e-5));

  CHECK_THROWS_AS(el2n_from_probs(p, 3), ArgumentError);
  CHECK_THROWS_AS(el2n_from_probs(p, -1), ArgumentError);
}

TEST_CASE("el2n averages over the ensemble") {
  Eigen::VectorXd a(2), b(2);
  a << 0.9, 0.1;
  b << 0.4, 0.6;
  const std::vector<ModelParams> ens{constant_model(a), constant_model(b)};
  const double expect = (el2n_from_probs(a, 0) + el2n_from_probs(b, 0)) / 2;
  CHECK(el2n_score(ens, Eigen::Vector2d::Zero(), 0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(el2n_score(std::span<const ModelParams>{}, Eigen::Vector2d::Zero(), 0), ArgumentError);
}

TEST_CASE("el2n stays within [0, sqrt 2]") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int C = 2 + trial % 9;
    Eigen::VectorXd p(C);
    for (int c = 0; c < C; ++c) p[c] = std::pow(u(rng), 4);
    p /= p.sum();
    const double s = el2n_from_probs(p, trial % C);
    CHECK(s >= 0.0);
    CHECK(s <= std::sqrt(2.0) + 1e-12);
  }
  Eigen::VectorXd wrong(3);
  wrong << 0.0, 0.0, 1.0;
  CHECK(el2n_from_probs(wrong, 0) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("sigma at the threshold is one") {
  for (double tau : {0.0, 0.7, std::log(10.0), 5.0})
    for (double lambda : {0.01, 1.0, 100.0}) CHECK(superloss_sigma(tau, {tau, lambda}) == 1.0);
}

TEST_CASE("sigma tends to one for huge lambda") {
  const SuperLossConfig cfg{std::log(10.0), 1e6};
  for (double loss : {0.0, 0.5, 1.0, 2.0, 3.0, 4.5}) CHECK(std::abs(superloss_sigma(loss, cfg) - 1.0) <= 1e-3);
}

TEST_CASE("sigma against the grid oracle") {
  // the documented example
  const SuperLossConfig fixed{std::log(10.0), 0.25};
  const double loss = fixed.tau - 1.0;
  const double oracle = grid_sigma(loss, fixed);
  CHECK(std::abs(superloss_sigma(loss, fixed) - oracle) <= 1e-4 * std::max(1.0, oracle));

  Rng rng(17);
  std::uniform_real_distribution<double> L(0.0, 6.0), T(0.0, 3.0), lam(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const SuperLossConfig cfg{T(rng), std::pow(10.0, lam(rng))};
    const double l = L(rng);
    const double got = superloss_sigma(l, cfg);
    const double want = grid_sigma(l, cfg);
    CAPTURE(l);
    CAPTURE(cfg.tau);
    CAPTURE(cfg.lambda);
    CHECK(std::abs(got - want) <= 1e-4 * std::max(1.0, want));
  }
}

TEST_CASE("sigma is a global minimum on the log grid") {
  Rng rng(5);
  std::uniform_real_distribution<double> L(0.0, 6.0), T(0.0, 3.0), lam(-2.0, 2.0);
  const double lo = std::log(kSigmaMin), hi = std::log(kSigmaMax);
  for (int trial = 0; trial < 50; ++trial) {
    const SuperLossConfig cfg{T(rng), std::pow(10.0, lam(rng))};
    const double l = L(rng);
    const double s = superloss_sigma(l, cfg);
    CHECK(s >= kSigmaMin);
    CHECK(s <= kSigmaMax);
    const double gs = superloss_objective(s, l, cfg);
    bool ok = true;
    for (int i = 0; i < 2001; ++i) {
      const double sigma = std::exp(lo + (hi - lo) * i / 2000.0);
      if (gs > superloss_objective(sigma, l, cfg) + 1e-7) ok = false;
    }
    CHECK(ok);
  }
}

TEST_CASE("sigma is non-increasing in the loss") {
  for (double lambda : {0.05, 0.5, 1.0, 20.0}) {
    const SuperLossConfig cfg{std::log(10.0), lambda};
    double prev = superloss_sigma(0.0, cfg);
    for (int i = 1; i <= 400; ++i) {
      const double s = superloss_sigma(i * 0.02, cfg);
      CHECK(s <= prev);
      prev = s;
    }
  }
}

TEST_CASE("sigma rejects bad input") {
  CHECK_THROWS_AS(superloss_sigma(std::nan(""), {}), NumericError);
  CHECK_THROWS_AS(superloss_sigma(INFINITY, {}), NumericError);
  CHECK_THROWS_AS(superloss_sigma(1.0, {0.0, 0.0}), ArgumentError);
  CHECK(SuperLossConfig::for_classes(10).tau == doctest::Approx(std::log(10.0)));
}

TEST_CASE("cl_score combination") {
  Eigen::VectorXd p(3);
  p << 0.2, 0.5, 0.3;
  const std::vector<ModelParams> ens{constant_model(p)};
  const Eigen::Vector2d x(0.3, 0.1);
  const double el2n = el2n_score(ens, x, 1);

  SUBCASE("no curriculum is plain el2n") {
    CHECK(cl_score(ens, x, 1, false, {0.1, 1.0}) == el2n);
  }
  SUBCASE("loss at the threshold keeps el2n") {
    const SuperLossConfig cfg{-std::log(0.5), 1.0};
    CHECK(cl_score(ens, x, 1, true, cfg) == doctest::Approx(el2n).epsilon(1e-12));
  }
  SUBCASE("general value is sigma times el2n") {
    const SuperLossConfig cfg{1.0, 2.0};
    const double want = grid_sigma(-std::log(0.5), cfg) * el2n;
    CHECK(cl_score(ens, x, 1, true, cfg) == doctest::Approx(want).epsilon(1e-4));
  }
}

TEST_CASE("easy sample outranks hard sample at equal el2n") {
  // y = 0 for both. Spread error (0.6, 0.2, 0.2) and concentrated error
  // (x, 1 - x, 0) have equal el2n when 2 (1 - x)^2 = 0.24; the concentrated one
  // has the smaller cross-entropy.
  const double x = 1.0 - std::sqrt(0.12);
  Eigen::VectorXd easy(3), hard(3);
  easy << x, 1.0 - x - 1e-12, 1e-12;
  hard << 0.6, 0.2, 0.2;
  const std::vector<ModelParams> ee{constant_model(easy)}, eh{constant_model(hard)};
  const Eigen::Vector2d in = Eigen::Vector2d::Zero();
  REQUIRE(el2n_score(ee, in, 0) == doctest::Approx(el2n_score(eh, in, 0)).epsilon(1e-9));
  const double l_easy = -std::log(x), l_hard = -std::log(0.6);
  REQUIRE(l_easy < l_hard);
  for (double lambda : {0.1, 1.0, 10.0}) {
    const SuperLossConfig cfg{(l_easy + l_hard) / 2, lambda};
    CHECK(cl_score(ee, in, 0, true, cfg) > cl_score(eh, in, 0, true, cfg));
  }
}

TEST_CASE("class quotas") {
  CHECK(class_quotas(20, 10) == std::vector<std::size_t>(10, 2));
  CHECK(class_quotas(7, 3) == std::vector<std::size_t>{3, 2, 2});
  CHECK(class_quotas(2, 4) == std::vector<std::size_t>{1, 1, 0, 0});
}

TEST_CASE("full-size trustset is the labeled set") {
  const Fixture f = random_fixture(1, {4, 6, 3});
  const TrustSet t = balanced_top(f.table.ids, f.labels, f.scores, 3, f.table.size(), false);
  std::vector<SampleId> got = t.ids;
  std::sort(got.begin(), got.end());
  CHECK(got == f.table.ids);
}

TEST_CASE("balanced two-class pick matches a sort oracle") {
  const Fixture f = random_fixture(2, {5, 5});
  const TrustSet t = balanced_top(f.table.ids, f.labels, f.scores, 2, 4, false);
  REQUIRE(t.ids.size() == 4);
  std::set<SampleId> want;
  for (int c = 0; c < 2; ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < f.labels.size(); ++i)
      if (f.labels[i] == c) rows.push_back(i);
    std::sort(rows.begin(), rows.end(), [&](auto a, auto b) { return f.scores[a] > f.scores[b]; });
    want.insert(f.table.ids[rows[0]]);
    want.insert(f.table.ids[rows[1]]);
  }
  CHECK(std::set<SampleId>(t.ids.begin(), t.ids.end()) == want);
  CHECK(t.per_class_counts == std::vector<std::size_t>{2, 2});
}

TEST_CASE("deficit of a tiny class is redistributed by global score") {
  std::vector<int> sizes(10, 8);
  sizes[9] = 1;
  const Fixture f = random_fixture(3, sizes);
  const TrustSet t = balanced_top(f.table.ids, f.labels, f.scores, 10, 20, false);
  REQUIRE(t.ids.size() == 20);
  CHECK(t.per_class_counts[9] == 1);

  // oracle: top 2 per class (class 9 gives its only sample), then the best leftover overall
  std::set<SampleId> want;
  std::vector<std::size_t> leftover;
  for (int c = 0; c < 10; ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < f.labels.size(); ++i)
      if (f.labels[i] == c) rows.push_back(i);
    std::sort(rows.begin(), rows.end(), [&](auto a, auto b) { return f.scores[a] > f.scores[b]; });
    for (std::size_t k = 0; k < rows.size(); ++k)
      if (k < 2)
        want.insert(f.table.ids[rows[k]]);
      else
        leftover.push_back(rows[k]);
  }
  const auto best = *std::max_element(leftover.begin(), leftover.end(),
                                      [&](auto a, auto b) { return f.scores[a] < f.scores[b]; });
  want.insert(f.table.ids[best]);
  CHECK(std::set<SampleId>(t.ids.begin(), t.ids.end()) == want);
}

TEST_CASE("ties break by ascending id") {
  const std::vector<SampleId> ids{9, 4, 7, 1};
  const std::vector<int> labels{0, 0, 0, 0};
  const std::vector<double> scores{0.5, 0.5, 0.5, 0.5};
  const TrustSet t = balanced_top(ids, labels, scores, 1, 2, false);
  CHECK(t.ids == std::vector<SampleId>{1, 4});
}

TEST_CASE("second best group") {
  SUBCASE("exactly twice the quota gives the bottom half") {
    const Fixture f = random_fixture(4, {6, 6});
    const TrustSet t = balanced_top(f.table.ids, f.labels, f.scores, 2, 6, true);
    for (int c = 0; c < 2; ++c) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < f.labels.size(); ++i)
        if (f.labels[i] == c) rows.push_back(i);
      std::sort(rows.begin(), rows.end(), [&](auto a, auto b) { return f.scores[a] > f.scores[b]; });
      for (std::size_t k = 3; k < 6; ++k)
        CHECK(std::find(t.ids.begin(), t.ids.end(), f.table.ids[rows[k]]) != t.ids.end());
    }
    CHECK(t.ids.size() == 6);
  }
  SUBCASE("disjoint from the best group on random fixtures") {
    Rng rng(8);
    std::uniform_int_distribution<int> cls(2, 6), extra(0, 5);
    for (int trial = 0; trial < 100; ++trial) {
      const int C = cls(rng);
      const std::size_t bT = static_cast<std::size_t>(C) * (1 + trial % 3);
      const auto quota = class_quotas(bT, C);
      std::vector<int> sizes;
      for (int c = 0; c < C; ++c) sizes.push_back(static_cast<int>(2 * quota[c]) + extra(rng));
      const Fixture f = random_fixture(100 + trial, sizes);
      const TrustSet best = balanced_top(f.table.ids, f.labels, f.scores, C, bT, false);
      const TrustSet second = balanced_top(f.table.ids, f.labels, f.scores, C, bT, true);
      std::set<SampleId> a(best.ids.begin(), best.ids.end());
      for (SampleId id : second.ids) CHECK(a.count(id) == 0);
    }
  }
  SUBCASE("a class at or below quota contributes nothing before redistribution") {
    const Fixture f = random_fixture(5, {2, 8});
    // quota 2 each; class 0 is all skipped, class 1 gives ranks 3-4, then leftovers of class 1
    const TrustSet t = balanced_top(f.table.ids, f.labels, f.scores, 2, 4, true);
    CHECK(t.per_class_counts[0] == 0);
    CHECK(t.per_class_counts[1] == 4);
  }
}

TEST_CASE("per-class counts differ by at most one") {
  Rng rng(11);
  std::uniform_int_distribution<int> cls(2, 10), bt(2, 60), extra(0, 10);
  for (int trial = 0; trial < 200; ++trial) {
    const int C = cls(rng);
    const std::size_t bT = static_cast<std::size_t>(std::max(C, bt(rng)));
    const int need = static_cast<int>((bT + C - 1) / C);
    std::vector<int> sizes;
    for (int c = 0; c < C; ++c) sizes.push_back(need + extra(rng));
    const Fixture f = random_fixture(500 + trial, sizes);
    const TrustSet t = balanced_top(f.table.ids, f.labels, f.scores, C, bT, false);
    const auto [lo, hi] = std::minmax_element(t.per_class_counts.begin(), t.per_class_counts.end());
    CHECK(*hi - *lo <= 1);
    CHECK(t.ids.size() == bT);
    CHECK(std::set<SampleId>(t.ids.begin(), t.ids.end()).size() == bT);
  }
}

TEST_CASE("size is min of target and labeled count") {
  const Fixture f = random_fixture(6, {3, 2});
  CHECK(balanced_top(f.table.ids, f.labels, f.scores, 2, 50, false).ids.size() == 5);
  CHECK_THROWS_AS(balanced_top(f.table.ids, f.labels, f.scores, 2, 0, false), ArgumentError);
}

TEST_CASE("relabeling ids permutes the output") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Fixture f = random_fixture(900 + trial, {5, 7, 4, 9});
    std::vector<SampleId> perm = f.table.ids;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::map<SampleId, SampleId> to;
    for (std::size_t i = 0; i < perm.size(); ++i) to[f.table.ids[i]] = perm[i];

    const TrustSet a = balanced_top(f.table.ids, f.labels, f.scores, 4, 9, false);
    const TrustSet b = balanced_top(perm, f.labels, f.scores, 4, 9, false);
    std::set<SampleId> mapped;
    for (SampleId id : a.ids) mapped.insert(to[id]);
    CHECK(mapped == std::set<SampleId>(b.ids.begin(), b.ids.end()));
  }
}

TEST_CASE("extract_trustset through a model") {
  // 2 classes, scores come from a fixed probability vector per input row
  Eigen::VectorXd p(2);
  p << 0.7, 0.3;
  const std::vector<ModelParams> ens{constant_model(p, 1)};
  FeatureTable table;
  table.ids = {0, 1, 2, 3};
  table.features = Eigen::MatrixXd::Zero(4, 1);
  const std::vector<int> labels{0, 0, 1, 1};
  TrustSetConfig cfg;
  cfg.use_curriculum = false;
  const TrustSet t = extract_trustset(table, labels, 2, ens, cfg, SuperLossConfig::for_classes(2));
  CHECK(t.ids.size() == 2);  // default ceil(4/2)
  CHECK(t.per_class_counts == std::vector<std::size_t>{1, 1});
  CHECK(t.ids == std::vector<SampleId>{0, 2});
  CHECK(t.scores.at(2) == doctest::Approx(el2n_from_probs(p, 1)));
}

TEST_CASE("coefficient of variation") {
  CHECK(coefficient_of_variation(std::vector<std::size_t>{5, 5, 5}) == 0.0);
  CHECK(coefficient_of_variation(std::vector<std::size_t>{0, 0}) == 0.0);
  // counts 1, 3: mean 2, population sd 1
  CHECK(coefficient_of_variation(std::vector<std::size_t>{1, 3}) == doctest::Approx(0.5));
}
