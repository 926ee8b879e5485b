#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace cdalab {

/// Stream purposes for hierarchical seeding. Every consumer of randomness
/// derives its own stream from (seed, purpose, ids...) so adding one stream
/// never shifts the draws of another.
enum class Stream : std::uint64_t {
  Agent = 1,
  CoinSetup = 2,
  Harness = 3,
  Faults = 4,
  Split = 5,
  Bootstrap = 6,
  FailureToTreat = 7,
  Calibration = 8,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::initializer_list<std::uint64_t> ids = {}) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
  for (std::uint64_t id : ids) h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer on [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  double lognormal(double median, double sigma) { return median * std::exp(sigma * normal()); }

  /// Number of failures before the first success, success probability p.
  std::int64_t geometric(double p) {
    if (p >= 1.0) return 0;
    return static_cast<std::int64_t>(std::floor(std::log1p(-uniform()) / std::log1p(-p)));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cdalab
