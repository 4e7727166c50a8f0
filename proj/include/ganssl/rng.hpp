#pragma once
// Seeded RNG helpers. Every stochastic choice in the framework draws
// from an Rng constructed from an explicit (seed, stream) pair, so a
// run is a pure function of its config seed.

#include <cstdint>
#include <random>

namespace ganssl {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // Derive an independent stream: splitmix-style mix of seed and tag.
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(mix(seed, stream)) {}

  std::mt19937_64& engine() { return engine_; }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  // Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

// Stream tags, so modules never collide on the same raw seed.
enum class Stream : std::uint64_t {
  kSplit = 1,
  kInit = 2,
  kBatch = 3,
  kNoise = 4,
  kLatent = 5,
  kPseudoLabel = 6,
  kSynthetic = 7,
  kDensity = 8,
};

inline Rng make_rng(std::uint64_t seed, Stream s) {
  return Rng(seed, static_cast<std::uint64_t>(s));
}

}  // namespace ganssl
