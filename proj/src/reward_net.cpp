#include "bralt/reward_net.hpp"

#include "bralt/errors.hpp"
#include "bralt/random.hpp"

#include <cmath>
#include <string>

namespace bralt {

namespace {

constexpr double kMinScale = 1e-8;

}  // namespace

RewardNet::RewardNet(int input_dim, std::vector<int> hidden, std::uint64_t seed)
    : input_dim_(input_dim), hidden_(std::move(hidden)) {
  if (input_dim_ < 1) throw ArgumentError("reward net needs a positive input dimension");
  for (int h : hidden_)
    if (h < 1) throw ArgumentError("reward net hidden widths must be positive");
  Rng rng(seed);
  int fan_in = input_dim_;
  std::vector<int> widths = hidden_;
  widths.push_back(1);
  for (int fan_out : widths) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd w(fan_in, fan_out);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    Eigen::VectorXd b(fan_out);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = dist(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
    fan_in = fan_out;
  }
  input_mean_ = Eigen::VectorXd::Zero(input_dim_);
  input_scale_ = Eigen::VectorXd::Ones(input_dim_);
}

RewardNet::RewardNet(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, std::vector<int> hidden,
                     std::uint64_t seed)
    : RewardNet(static_cast<int>(inputs.cols()), std::move(hidden), seed) {
  if (inputs.rows() == 0 || inputs.rows() != targets.size())
    throw ArgumentError("reward net standardization needs matching, non-empty inputs and targets");
  const auto n = static_cast<double>(inputs.rows());
  input_mean_ = inputs.colwise().mean().transpose();
  input_scale_ = ((inputs.rowwise() - input_mean_.transpose()).array().square().colwise().sum() / n)
                     .sqrt()
                     .transpose();
  for (Eigen::Index j = 0; j < input_scale_.size(); ++j)
    if (!(input_scale_[j] > kMinScale)) input_scale_[j] = 1.0;
  target_mean_ = targets.mean();
  target_scale_ = std::sqrt((targets.array() - target_mean_).square().sum() / n);
  if (!(target_scale_ > kMinScale)) target_scale_ = 1.0;
}

Eigen::MatrixXd RewardNet::standardize(const Eigen::MatrixXd& inputs) const {
  if (inputs.cols() != input_dim_)
    throw ArgumentError("reward net expects inputs of width " + std::to_string(input_dim_) + ", got " +
                        std::to_string(inputs.cols()));
  return (inputs.rowwise() - input_mean_.transpose()).array().rowwise() / input_scale_.transpose().array();
}

Eigen::VectorXd RewardNet::forward(const Eigen::MatrixXd& z, std::vector<Eigen::MatrixXd>* activations) const {
  Eigen::MatrixXd a = z;
  if (activations != nullptr) activations->assign(1, a);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd pre = (a * weights_[l]).rowwise() + biases_[l].transpose();
    a = l + 1 < weights_.size() ? Eigen::MatrixXd(pre.cwiseMax(0.0)) : pre;
    if (activations != nullptr) activations->push_back(a);
  }
  return a.col(0);
}

double RewardNet::predict(const Eigen::VectorXd& input) const {
  return predict(Eigen::MatrixXd(input.transpose()))[0];
}

Eigen::VectorXd RewardNet::predict(const Eigen::MatrixXd& inputs) const {
  if (weights_.empty()) throw ArgumentError("reward net is not initialized");
  return (forward(standardize(inputs), nullptr).array() * target_scale_ + target_mean_).matrix();
}

double RewardNet::mse(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) const {
  if (inputs.rows() == 0 || inputs.rows() != targets.size())
    throw ArgumentError("mse needs matching, non-empty inputs and targets");
  return (predict(inputs) - targets).squaredNorm() / static_cast<double>(targets.size());
}

double RewardNet::sgd_step(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, double learning_rate) {
  if (inputs.rows() == 0 || inputs.rows() != targets.size())
    throw ArgumentError("sgd_step needs matching, non-empty inputs and targets");
  std::vector<Eigen::MatrixXd> acts;
  const Eigen::VectorXd out = forward(standardize(inputs), &acts);
  const Eigen::VectorXd y = (targets.array() - target_mean_) / target_scale_;
  const auto n = static_cast<double>(targets.size());
  const Eigen::VectorXd err = out - y;
  const double loss = err.squaredNorm() / n;
  if (!std::isfinite(loss)) throw NumericError("reward net loss became non-finite");

  Eigen::MatrixXd delta = (2.0 / n) * err;  // n x 1
  for (std::size_t l = weights_.size(); l-- > 0;) {
    const Eigen::MatrixXd grad_w = acts[l].transpose() * delta;
    const Eigen::VectorXd grad_b = delta.colwise().sum().transpose();
    if (l > 0)
      delta = ((delta * weights_[l].transpose()).array() * (acts[l].array() > 0.0).cast<double>()).matrix();
    weights_[l] -= learning_rate * grad_w;
    biases_[l] -= learning_rate * grad_b;
  }
  return loss;
}

}  // namespace bralt
