#include "dhl/random.hpp"

#include <cmath>

namespace dhl::rng {

namespace {
constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Stream::Stream(std::uint64_t seed) {
  SplitMix64 sm(seed);
  for (auto& word : s_) word = sm();
}

Stream Stream::derive(std::uint64_t master_seed, Domain domain, std::uint64_t i,
                      std::uint64_t j) {
  std::uint64_t h = mix64(master_seed + 0x9e3779b97f4a7c15ull);
  h = mix64(h ^ (static_cast<std::uint64_t>(domain) * 0xd1b54a32d192ed03ull));
  h = mix64(h ^ (i * 0xaef17502108ef2d9ull + 1));
  h = mix64(h ^ (j * 0xf58bb4b1d5a3a8c5ull + 2));
  return Stream(h);
}

Stream::result_type Stream::operator()() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::uint64_t Stream::below(std::uint64_t n) {
  __extension__ using u128 = unsigned __int128;
  u128 m = static_cast<u128>((*this)()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<u128>((*this)()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Stream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  double u, v, q;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    q = u * u + v * v;
  } while (q >= 1.0 || q == 0.0);
  const double f = std::sqrt(-2.0 * std::log(q) / q);
  cached_normal_ = v * f;
  has_cached_ = true;
  return u * f;
}

}  // namespace dhl::rng
