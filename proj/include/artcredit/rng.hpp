#pragma once

#include <cstdint>
#include <random>

namespace artcredit {

// One engine per simulation; every random decision is drawn from it in a fixed
// order so runs replay bit-for-bit from the seed.
using Rng = std::mt19937_64;

// Uniform double in [0, 1) built from the top 53 bits. Unlike
// std::uniform_real_distribution the result is identical across standard
// libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) {
  return uniform01(rng) < p;
}

// Unbiased integer in [0, n) (Lemire's multiply-shift with rejection).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  std::uint64_t x = rng();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = rng();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace artcredit
