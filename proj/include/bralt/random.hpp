#pragma once

#include <cstdint>
#include <random>

namespace bralt {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` of `seed`. Distinct streams give unrelated sequences.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  return derive_seed(derive_seed(seed, a), b);
}

// Stream tags, kept in one place so sub-seeds never collide by accident.
namespace stream {
inline constexpr std::uint64_t kMixtureMeans = 1;
inline constexpr std::uint64_t kMixtureNoise = 2;
inline constexpr std::uint64_t kImbalance = 3;
inline constexpr std::uint64_t kTestSplit = 4;
inline constexpr std::uint64_t kInitialLabeled = 5;
inline constexpr std::uint64_t kLearner = 6;
inline constexpr std::uint64_t kSelection = 7;
inline constexpr std::uint64_t kEnvPair = 8;
inline constexpr std::uint64_t kRewardNet = 9;
inline constexpr std::uint64_t kClustering = 10;
inline constexpr std::uint64_t kSubsample = 11;
}  // namespace stream

}  // namespace bralt
