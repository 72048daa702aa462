#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace sdeinfer {

/// Stream identifiers mixed into derived seeds so that independent parts of
/// an experiment never share random numbers.
enum class StreamTag : std::uint64_t {
  kTrialPoints = 0x7472,
  kEnsemble = 0x656e,
  kSeries = 0x7365,
  kReplicate = 0x7270,
};

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Hashes (seed, path...) into a seed for an independent stream. Equal
/// inputs give equal outputs on every platform.
std::uint64_t derive_seed(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path) noexcept;

/// Reproducible random stream. Each (trial point, member) pair of an
/// ensemble owns one, so results do not depend on scheduling.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream derived(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return RandomStream(derive_seed(seed, path));
  }

  double normal() { return normal_(engine_); }
  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal_(engine_);
  }
  double uniform() { return std::generate_canonical<double, 53>(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace sdeinfer
