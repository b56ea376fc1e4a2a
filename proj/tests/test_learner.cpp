#include <doctest.h>

#include "bralt/dataset.hpp"
#include "bralt/errors.hpp"
#include "bralt/learner.hpp"
#include "bralt/random.hpp"

#include <cmath>

using namespace bralt;

namespace {

struct Instance {
  ModelParams params;
  Eigen::MatrixXd X;
  std::vector<int> y;
  std::vector<double> w;
};

Instance random_instance(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> dim(1, 4), hid(1, 5), cls(2, 3), rows(1, 6);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  Instance in;
  const int d = dim(rng), h = hid(rng), C = cls(rng), n = rows(rng);
  in.params = init_params(d, h, C, seed + 1);
  // push pre-activations away from the ReLU kink so central differences are clean
  in.params.b1.array() += 0.05;
  in.X.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) in.X(i, j) = g(rng);
  std::uniform_int_distribution<int> lab(0, C - 1);
  for (int i = 0; i < n; ++i) {
    in.y.push_back(lab(rng));
    in.w.push_back(u(rng));
  }
  return in;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)}); }

template <typename M>
double check_block(Instance& in, M& block, const M& analytic, double wd) {
  double worst = 0.0;
  const double h = 1e-5;
  for (Eigen::Index k = 0; k < block.size(); ++k) {
    const double keep = block.data()[k];
    block.data()[k] = keep + h;
    const double up = loss_and_gradient(in.params, in.X, in.y, in.w, wd, nullptr);
    block.data()[k] = keep - h;
    const double dn = loss_and_gradient(in.params, in.X, in.y, in.w, wd, nullptr);
    block.data()[k] = keep;
    const double fd = (up - dn) / (2 * h);
    // skip entries whose finite difference straddles a ReLU kink
    if (std::abs(fd) < 1e-9 && std::abs(analytic.data()[k]) < 1e-9) continue;
    worst = std::max(worst, rel_err(fd, analytic.data()[k]));
  }
  return worst;
}

}  // namespace

TEST_CASE("gradient matches central differences on random small instances") {
  int passed = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto in = random_instance(seed);
    Gradients g;
    loss_and_gradient(in.params, in.X, in.y, in.w, 1e-2, &g);
    double worst = 0.0;
    worst = std::max(worst, check_block(in, in.params.W1, g.W1, 1e-2));
    worst = std::max(worst, check_block(in, in.params.b1, g.b1, 1e-2));
    worst = std::max(worst, check_block(in, in.params.W2, g.W2, 1e-2));
    worst = std::max(worst, check_block(in, in.params.b2, g.b2, 1e-2));
    if (worst < 1e-4) ++passed;
    else MESSAGE("seed " << seed << " worst relative error " << worst);
  }
  CHECK(passed == 50);
}

TEST_CASE("softmax") {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 4);
  const auto p = softmax_rows(z);
  for (int k = 0; k < 4; ++k) CHECK(p(0, k) == doctest::Approx(0.25));

  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(1, 3);
  big(0, 0) = 800.0;
  CHECK(softmax_rows(big)(0, 0) == doctest::Approx(1.0));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto params = init_params(5, 7, 4, seed);
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 3.0);
    Eigen::VectorXd x(5);
    for (int j = 0; j < 5; ++j) x[j] = g(rng);
    const auto probs = predict_proba(params, x);
    CHECK(std::abs(probs.sum() - 1.0) < 1e-12);
    CHECK((probs.array() > 0.0).all());
  }
}

TEST_CASE("zero weights give uniform output") {
  auto params = init_params(3, 4, 5, 0);
  params.W1.setZero();
  params.b1.setZero();
  params.W2.setZero();
  params.b2.setZero();
  const auto p = predict_proba(params, Eigen::VectorXd(Eigen::VectorXd::Constant(3, 2.0)));
  for (int k = 0; k < 5; ++k) CHECK(p[k] == doctest::Approx(0.2));
}

TEST_CASE("cross entropy") {
  CHECK(cross_entropy(Eigen::Vector3d(0, 1, 0), 1) == doctest::Approx(0.0));
  CHECK(cross_entropy(Eigen::VectorXd::Constant(7, 1.0 / 7), 3) == doctest::Approx(std::log(7.0)));
  CHECK(cross_entropy(Eigen::Vector2d(0.7, 0.3), 1) == doctest::Approx(1.20397).epsilon(1e-5));
  CHECK(std::isfinite(cross_entropy(Eigen::Vector2d(1.0, 0.0), 1)));
}

TEST_CASE("accuracy") {
  const auto params = init_params(2, 3, 2, 1);
  CHECK_THROWS_AS(accuracy(params, Eigen::MatrixXd(0, 2), std::vector<int>{}), ArgumentError);

  // hand-set linear model: class = sign of first coordinate
  ModelParams lin;
  lin.W1.resize(2, 0);
  lin.b1.resize(0);
  lin.W2 = Eigen::MatrixXd::Zero(2, 2);
  lin.W2(0, 1) = 1.0;
  lin.W2(0, 0) = -1.0;
  lin.b2 = Eigen::Vector2d::Zero();
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, -2, 5, 3, 3, -1, -1;
  // predictions 1, 0, 1, 0
  CHECK(accuracy(lin, X, std::vector<int>{1, 0, 1, 0}) == doctest::Approx(1.0));
  CHECK(accuracy(lin, X, std::vector<int>{1, 1, 1, 1}) == doctest::Approx(0.5));
  CHECK(accuracy(lin, X, std::vector<int>{0, 1, 1, 1}) == doctest::Approx(0.25));
}

TEST_CASE("training on separable blobs") {
  const auto data = std::make_shared<const Dataset>(gen_gaussian_mixture(2, 2, 200, 10.0, 3));
  const auto s = init_split(data, 300, 0.25, 0);
  TrainConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 50;
  const auto tr = gather_features(*data, s.labeled);
  const auto te = gather_features(*data, s.test);
  const auto m = train_from_scratch(tr.features, gather_labels(*data, s.labeled), 2, cfg);
  CHECK(accuracy(m, te.features, gather_labels(*data, s.test)) >= 0.99);

  const auto again = train_from_scratch(tr.features, gather_labels(*data, s.labeled), 2, cfg);
  CHECK(m == again);

  cfg.epochs = 0;
  CHECK_THROWS_AS(train_from_scratch(tr.features, gather_labels(*data, s.labeled), 2, cfg), ArgumentError);
}

TEST_CASE("vanishing learning rate leaves parameters at their init") {
  const auto data = gen_gaussian_mixture(3, 3, 10, 3.0, 3);
  const auto ids = data.ids();
  const auto tab = gather_features(data, ids);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.learning_rate = 1e-300;
  cfg.seed = 17;
  const auto m = train_from_scratch(tab.features, gather_labels(data, ids), 3, cfg);
  const auto init = init_params(3, cfg.hidden, 3, derive_seed(cfg.seed, stream::kLearner));
  CHECK((m.W1 - init.W1).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((m.W2 - init.W2).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((m.b1 - init.b1).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((m.b2 - init.b2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("property: small-lr training loss is mostly non-increasing") {
  const auto data = gen_gaussian_mixture(3, 4, 15, 3.0, 8);
  const auto ids = data.ids();
  const auto tab = gather_features(data, ids);
  const auto y = gather_labels(data, ids);
  int ok = 0;
  const int trials = 30;
  for (int t = 0; t < trials; ++t) {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.005;
    cfg.seed = static_cast<std::uint64_t>(t);
    TrainTrace trace;
    train_from_scratch(tab.features, y, 3, cfg, &trace);
    bool mono = true;
    for (std::size_t e = 2; e < trace.epoch_loss.size(); ++e)
      if (trace.epoch_loss[e] > trace.epoch_loss[e - 1] + 1e-12) mono = false;
    ok += mono;
  }
  CHECK(ok >= 0.9 * trials);
}

TEST_CASE("superloss training mode runs and stays finite") {
  const auto data = gen_gaussian_mixture(3, 4, 30, 3.0, 8);
  const auto ids = data.ids();
  const auto tab = gather_features(data, ids);
  TrainConfig cfg;
  cfg.loss_mode = LossMode::superloss;
  cfg.superloss = SuperLossConfig::for_classes(3);
  const auto m = train_from_scratch(tab.features, gather_labels(data, ids), 3, cfg);
  CHECK(accuracy(m, tab.features, gather_labels(data, ids)) > 0.6);
}

TEST_CASE("argmax picks the lowest index on ties") {
  CHECK(argmax(Eigen::Vector3d(1, 3, 3)) == 1);
  CHECK(argmax(Eigen::Vector3d(2, 2, 2)) == 0);
}
