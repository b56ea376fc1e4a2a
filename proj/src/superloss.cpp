#include "bralt/superloss.hpp"

#include "bralt/errors.hpp"

#include <boost/math/special_functions/lambert_w.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace bralt {

SuperLossConfig SuperLossConfig::for_classes(int num_classes, double lambda) {
  if (num_classes < 1) throw ArgumentError("SuperLoss needs at least one class");
  return {std::log(static_cast<double>(num_classes)), lambda};
}

double superloss_objective(double sigma, double loss, const SuperLossConfig& cfg) {
  const double log_sigma = std::log(sigma);
  return (loss - cfg.tau) * sigma + cfg.lambda * log_sigma * log_sigma;
}

double superloss_sigma(double loss, const SuperLossConfig& cfg) {
  if (!std::isfinite(loss)) throw NumericError("SuperLoss sigma requested for non-finite loss");
  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda))
    throw ArgumentError("SuperLoss lambda must be positive, got " + std::to_string(cfg.lambda));

  const double beta = loss - cfg.tau;
  if (beta == 0.0) return 1.0;

  double best = kSigmaMin;
  double best_value = superloss_objective(kSigmaMin, loss, cfg);
  const auto consider = [&](double sigma) {
    const double value = superloss_objective(sigma, loss, cfg);
    if (value <= best_value) {
      best = sigma;
      best_value = value;
    }
  };
  consider(kSigmaMax);

  const double z = beta / (2.0 * cfg.lambda);
  if (z >= -std::exp(-1.0)) {
    const double u = boost::math::lambert_w0(z);
    consider(std::clamp(std::exp(-u), kSigmaMin, kSigmaMax));
  }
  return best;
}

}  // namespace bralt
