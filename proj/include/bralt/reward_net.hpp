#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace bralt {

/// Fully connected ReLU regressor with a scalar output, trained by plain SGD on
/// mean squared error. Inputs and targets are standardized with statistics
/// frozen at construction; `predict` returns values on the original scale.
class RewardNet {
 public:
  RewardNet() = default;
  /// Identity standardization.
  RewardNet(int input_dim, std::vector<int> hidden, std::uint64_t seed);
  /// Standardization fitted to `inputs` (rows) and `targets`.
  RewardNet(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, std::vector<int> hidden,
            std::uint64_t seed);

  int input_dim() const noexcept { return input_dim_; }
  const std::vector<int>& hidden() const noexcept { return hidden_; }

  double predict(const Eigen::VectorXd& input) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& inputs) const;
  double mse(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) const;

  /// One gradient step on the batch MSE (standardized scale). Returns the loss before the step.
  double sgd_step(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, double learning_rate);

  friend bool operator==(const RewardNet&, const RewardNet&) = default;

 private:
  Eigen::MatrixXd standardize(const Eigen::MatrixXd& inputs) const;
  Eigen::VectorXd forward(const Eigen::MatrixXd& z, std::vector<Eigen::MatrixXd>* activations) const;

  int input_dim_ = 0;
  std::vector<int> hidden_;
  std::vector<Eigen::MatrixXd> weights_;  // in x out
  std::vector<Eigen::VectorXd> biases_;
  Eigen::VectorXd input_mean_;
  Eigen::VectorXd input_scale_;
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;
};

}  // namespace bralt
