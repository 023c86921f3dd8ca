#ifndef LOCFRK_RANDOM_HPP
#define LOCFRK_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace locfrk {

inline std::uint64_t splitmix64(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a path of integers into one 64-bit key; distinct paths give
/// statistically independent keys.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = 0x6a09e667f3bcc909ULL;
  std::uint64_t key = splitmix64(state);
  for (std::uint64_t p : path) {
    state ^= p + 0x9e3779b97f4a7c15ULL + (key << 6) + (key >> 2);
    key = splitmix64(state);
  }
  return key;
}

/// xoshiro256** (Blackman & Vigna) seeded through splitmix64.
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto &w : s_) {
      w = splitmix64(sm);
    }
  }

  Rng(std::initializer_list<std::uint64_t> path) : Rng(derive_seed(path)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
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

  /// Uniform on (0, 1).
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

} // namespace locfrk

#endif
