#pragma once

#include <cstdint>
#include <limits>

namespace dhl::rng {

// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t operator()() { return mix64(state_ += 0x9e3779b97f4a7c15ull); }

 private:
  std::uint64_t state_;
};

// Independent-use domains, mixed into every substream key so that e.g.
// realization 3 of a measure sampler never shares a stream with chunk 3 of
// a population step.
enum class Domain : std::uint64_t {
  kPopulationSeed = 0x11,
  kPopulationStep = 0x12,
  kMeasureLeaves = 0x21,
  kGmcField = 0x31,
  kGmcComposite = 0x32,
  kExperiment = 0x41,
  kTest = 0x7f,
};

// xoshiro256** stream. Substreams are keyed by (master seed, domain, i, j):
// the key is hashed through SplitMix64 into the 256-bit state, so any
// (iteration, chunk) or (realization, draw) pair maps to a reproducible
// stream independent of scheduling.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t seed);
  static Stream derive(std::uint64_t master_seed, Domain domain, std::uint64_t i,
                       std::uint64_t j = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, n); unbiased (Lemire's multiply-shift rejection).
  std::uint64_t below(std::uint64_t n);
  // Standard normal (Marsaglia polar; the paired variate is cached).
  double normal();

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace dhl::rng
