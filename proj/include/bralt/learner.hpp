#pragma once

#include "bralt/superloss.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace bralt {

enum class LossMode { plain_ce, superloss };

struct TrainConfig {
  /// Hidden width; 0 selects plain softmax regression.
  int hidden = 32;
  int epochs = 50;
  int batch_size = 16;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::plain_ce;
  /// Only read when loss_mode == superloss.
  SuperLossConfig superloss{};

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// One-hidden-layer ReLU classifier. Row-vector convention: logits = relu(x W1 + b1) W2 + b2.
/// With hidden == 0, W1/b1 are empty and logits = x W2 + b2.
struct ModelParams {
  Eigen::MatrixXd W1;  // d x h
  Eigen::VectorXd b1;  // h
  Eigen::MatrixXd W2;  // h x C (d x C without a hidden layer)
  Eigen::VectorXd b2;  // C

  int input_dim() const noexcept { return static_cast<int>(hidden() > 0 ? W1.rows() : W2.rows()); }
  int hidden() const noexcept { return static_cast<int>(W1.cols()); }
  int num_classes() const noexcept { return static_cast<int>(W2.cols()); }
  /// Width of `features()` output.
  int feature_dim() const noexcept { return static_cast<int>(W2.rows()); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], weights and biases alike.
ModelParams init_params(int input_dim, int hidden, int num_classes, std::uint64_t seed);

struct Gradients {
  Eigen::MatrixXd W1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;
  Eigen::VectorXd b2;
};

/// Weighted mean cross-entropy plus (weight_decay / 2) * |W|^2 over the weight matrices.
/// `weights` may be empty (all ones). Fills `grad` when non-null.
double loss_and_gradient(const ModelParams& params, const Eigen::MatrixXd& X, std::span<const int> labels,
                         std::span<const double> weights, double weight_decay, Gradients* grad);

struct TrainTrace {
  /// Full-data objective after each epoch.
  std::vector<double> epoch_loss;
};

/// Mini-batch SGD with momentum from a fresh seeded initialization. In superloss
/// mode each sample's cross-entropy gradient is weighted by its sigma* and the
/// batch is normalized by the sum of weights.
ModelParams train_from_scratch(const Eigen::MatrixXd& X, std::span<const int> labels, int num_classes,
                               const TrainConfig& config, TrainTrace* trace = nullptr);

/// Rows of logits for rows of X.
Eigen::MatrixXd logits(const ModelParams& params, const Eigen::MatrixXd& X);
Eigen::MatrixXd predict_proba(const ModelParams& params, const Eigen::MatrixXd& X);
Eigen::VectorXd predict_proba(const ModelParams& params, const Eigen::VectorXd& x);

/// Row-wise numerically stable softmax.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// -log(probs[label]), capped at -log(1e-30).
double cross_entropy(const Eigen::VectorXd& probs, int label);

/// Penultimate activations (post-ReLU); the input itself when hidden == 0.
Eigen::MatrixXd features(const ModelParams& params, const Eigen::MatrixXd& X);
Eigen::VectorXd features(const ModelParams& params, const Eigen::VectorXd& x);

/// Index of the largest entry, lowest index on ties.
int argmax(const Eigen::Ref<const Eigen::VectorXd>& v);

double accuracy(const ModelParams& params, const Eigen::MatrixXd& X, std::span<const int> labels);

}  // namespace bralt
