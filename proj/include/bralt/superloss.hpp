#pragma once

namespace bralt {

/// Curriculum weighting g(sigma) = (loss - tau) * sigma + lambda * log(sigma)^2.
struct SuperLossConfig {
  double tau = 0.0;
  double lambda = 1.0;

  /// tau = log(C), the usual threshold between easy and hard samples.
  static SuperLossConfig for_classes(int num_classes, double lambda = 1.0);

  friend bool operator==(const SuperLossConfig&, const SuperLossConfig&) = default;
};

inline constexpr double kSigmaMin = 1e-6;
inline constexpr double kSigmaMax = 1e6;

double superloss_objective(double sigma, double loss, const SuperLossConfig& cfg);

/// Minimizer of the objective over sigma in [kSigmaMin, kSigmaMax].
///
/// The only interior critical point that can be a minimum is
/// sigma = exp(-W0((loss - tau) / (2 lambda))), which exists when the argument
/// is >= -1/e. For loss < tau the objective decreases without bound as sigma
/// grows, so the right end of the interval competes with that point and wins
/// for all but near-threshold losses. Non-increasing in `loss`.
double superloss_sigma(double loss, const SuperLossConfig& cfg);

}  // namespace bralt
