#include "bralt/learner.hpp"

#include "bralt/errors.hpp"
#include "bralt/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bralt {

namespace {

constexpr double kProbFloor = 1e-30;

void check_input(const ModelParams& params, const Eigen::MatrixXd& X) {
  if (X.cols() != params.input_dim())
    throw ArgumentError("feature dimension " + std::to_string(X.cols()) + " does not match model input " +
                        std::to_string(params.input_dim()));
}

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

struct Forward {
  Eigen::MatrixXd pre;     // X W1 + b1
  Eigen::MatrixXd hidden;  // relu(pre), or X when there is no hidden layer
  Eigen::MatrixXd probs;
};

Forward forward(const ModelParams& p, const Eigen::MatrixXd& X) {
  Forward f;
  if (p.hidden() > 0) {
    f.pre = (X * p.W1).rowwise() + p.b1.transpose();
    f.hidden = f.pre.cwiseMax(0.0);
  } else {
    f.hidden = X;
  }
  f.probs = softmax_rows((f.hidden * p.W2).rowwise() + p.b2.transpose());
  return f;
}

void sgd_step(Eigen::MatrixXd& param, Eigen::MatrixXd& velocity, const Eigen::MatrixXd& grad, double lr,
              double momentum) {
  velocity = momentum * velocity + grad;
  param -= lr * velocity;
}

void sgd_step(Eigen::VectorXd& param, Eigen::VectorXd& velocity, const Eigen::VectorXd& grad, double lr,
              double momentum) {
  velocity = momentum * velocity + grad;
  param -= lr * velocity;
}

}  // namespace

ModelParams init_params(int input_dim, int hidden, int num_classes, std::uint64_t seed) {
  if (input_dim < 1 || hidden < 0 || num_classes < 1)
    throw ArgumentError("invalid model shape (" + std::to_string(input_dim) + ", " + std::to_string(hidden) +
                        ", " + std::to_string(num_classes) + ")");
  Rng rng(seed);
  ModelParams p;
  const int out_in = hidden > 0 ? hidden : input_dim;
  if (hidden > 0) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    p.W1 = uniform_matrix(input_dim, hidden, bound, rng);
    p.b1 = uniform_matrix(hidden, 1, bound, rng);
  } else {
    p.W1.resize(input_dim, 0);
    p.b1.resize(0);
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(out_in));
  p.W2 = uniform_matrix(out_in, num_classes, bound, rng);
  p.b2 = uniform_matrix(num_classes, 1, bound, rng);
  return p;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out = z.colwise() - z.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

double cross_entropy(const Eigen::VectorXd& probs, int label) {
  if (label < 0 || label >= probs.size())
    throw ArgumentError("label " + std::to_string(label) + " out of range");
  return -std::log(std::max(probs[label], kProbFloor));
}

double loss_and_gradient(const ModelParams& params, const Eigen::MatrixXd& X, std::span<const int> labels,
                         std::span<const double> weights, double weight_decay, Gradients* grad) {
  check_input(params, X);
  const auto n = X.rows();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size())
    throw ArgumentError("loss needs one label per row and at least one row");
  if (!weights.empty() && weights.size() != labels.size())
    throw ArgumentError("loss weights must match the number of rows");

  const Forward f = forward(params, X);
  const int C = params.num_classes();
  double weight_sum = 0.0;
  double loss = 0.0;
  Eigen::MatrixXd dlogits = f.probs;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= C) throw ArgumentError("label " + std::to_string(y) + " out of range");
    const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
    weight_sum += w;
    loss += w * -std::log(std::max(f.probs(i, y), kProbFloor));
    dlogits(i, y) -= 1.0;
    dlogits.row(i) *= w;
  }
  if (!(weight_sum > 0.0)) throw NumericError("loss weights sum to zero");
  loss /= weight_sum;
  dlogits /= weight_sum;
  loss += 0.5 * weight_decay * (params.W1.squaredNorm() + params.W2.squaredNorm());

  if (grad != nullptr) {
    grad->W2 = f.hidden.transpose() * dlogits + weight_decay * params.W2;
    grad->b2 = dlogits.colwise().sum().transpose();
    if (params.hidden() > 0) {
      const Eigen::MatrixXd dpre =
          ((dlogits * params.W2.transpose()).array() * (f.pre.array() > 0.0).cast<double>()).matrix();
      grad->W1 = X.transpose() * dpre + weight_decay * params.W1;
      grad->b1 = dpre.colwise().sum().transpose();
    } else {
      grad->W1.resize(params.W1.rows(), 0);
      grad->b1.resize(0);
    }
  }
  return loss;
}

ModelParams train_from_scratch(const Eigen::MatrixXd& X, std::span<const int> labels, int num_classes,
                               const TrainConfig& config, TrainTrace* trace) {
  if (X.rows() == 0) throw ArgumentError("cannot train on an empty labeled set");
  if (static_cast<std::size_t>(X.rows()) != labels.size())
    throw ArgumentError("training data needs one label per row");
  if (config.epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (config.batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(config.learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
  if (config.hidden < 0) throw ArgumentError("hidden width must be >= 0");

  ModelParams params = init_params(static_cast<int>(X.cols()), config.hidden, num_classes,
                                   derive_seed(config.seed, stream::kLearner));
  ModelParams velocity = params;
  velocity.W1.setZero();
  velocity.b1.setZero();
  velocity.W2.setZero();
  velocity.b2.setZero();

  const auto n = static_cast<std::size_t>(X.rows());
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> batch_labels;
  std::vector<double> batch_weights;
  Gradients g;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, stream::kLearner, static_cast<std::uint64_t>(epoch) + 1));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0, b = 0; start < n; start += batch, ++b) {
      const std::size_t stop = std::min(n, start + batch);
      Eigen::MatrixXd xb(static_cast<Eigen::Index>(stop - start), X.cols());
      batch_labels.clear();
      for (std::size_t k = start; k < stop; ++k) {
        xb.row(static_cast<Eigen::Index>(k - start)) = X.row(static_cast<Eigen::Index>(order[k]));
        batch_labels.push_back(labels[order[k]]);
      }
      batch_weights.clear();
      if (config.loss_mode == LossMode::superloss) {
        const Eigen::MatrixXd probs = predict_proba(params, xb);
        for (std::size_t k = 0; k < batch_labels.size(); ++k) {
          const double ce = cross_entropy(probs.row(static_cast<Eigen::Index>(k)).transpose(), batch_labels[k]);
          batch_weights.push_back(superloss_sigma(ce, config.superloss));
        }
      }
      const double loss = loss_and_gradient(params, xb, batch_labels, batch_weights, config.weight_decay, &g);
      if (!std::isfinite(loss))
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b));
      sgd_step(params.W2, velocity.W2, g.W2, config.learning_rate, config.momentum);
      sgd_step(params.b2, velocity.b2, g.b2, config.learning_rate, config.momentum);
      if (params.hidden() > 0) {
        sgd_step(params.W1, velocity.W1, g.W1, config.learning_rate, config.momentum);
        sgd_step(params.b1, velocity.b1, g.b1, config.learning_rate, config.momentum);
      }
    }
    if (trace != nullptr)
      trace->epoch_loss.push_back(loss_and_gradient(params, X, labels, {}, config.weight_decay, nullptr));
  }
  return params;
}

Eigen::MatrixXd logits(const ModelParams& params, const Eigen::MatrixXd& X) {
  check_input(params, X);
  const Eigen::MatrixXd h = features(params, X);
  return (h * params.W2).rowwise() + params.b2.transpose();
}

Eigen::MatrixXd predict_proba(const ModelParams& params, const Eigen::MatrixXd& X) {
  return softmax_rows(logits(params, X));
}

Eigen::VectorXd predict_proba(const ModelParams& params, const Eigen::VectorXd& x) {
  return predict_proba(params, Eigen::MatrixXd(x.transpose())).row(0).transpose();
}

Eigen::MatrixXd features(const ModelParams& params, const Eigen::MatrixXd& X) {
  check_input(params, X);
  if (params.hidden() == 0) return X;
  return ((X * params.W1).rowwise() + params.b1.transpose()).cwiseMax(0.0);
}

Eigen::VectorXd features(const ModelParams& params, const Eigen::VectorXd& x) {
  return features(params, Eigen::MatrixXd(x.transpose())).row(0).transpose();
}

int argmax(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) throw ArgumentError("argmax of an empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<int>(best);
}

double accuracy(const ModelParams& params, const Eigen::MatrixXd& X, std::span<const int> labels) {
  if (X.rows() == 0) throw ArgumentError("accuracy of an empty set is undefined");
  if (static_cast<std::size_t>(X.rows()) != labels.size())
    throw ArgumentError("accuracy needs one label per row");
  const Eigen::MatrixXd z = logits(params, X);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    if (argmax(z.row(i).transpose()) == labels[static_cast<std::size_t>(i)]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(X.rows());
}

}  // namespace bralt
