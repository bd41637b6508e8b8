#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

// Deterministic random number machinery. Every stochastic routine in the
// library derives its stream from an explicit 64-bit seed, so results are
// reproducible bit-for-bit and independent of scheduling. std:: distributions
// are avoided on purpose: their output is implementation-defined.

namespace synlearn {

// splitmix64: seed expander / integer mixer (Steele, Lea, Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives a child seed from (seed, salt); used to hand independent streams
// to replicates, trees, Monte Carlo cells, ...
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + (salt << 1));
  std::uint64_t a = splitmix64(s);
  s ^= salt * 0xff51afd7ed558ccdULL;
  return a ^ splitmix64(s);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) {
  return mix_seed(mix_seed(seed, a, b), c);
}

// FNV-1a; stable across builds, unlike std::hash.
inline std::uint64_t hash_string(const char* s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (; *s; ++s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*s));
    h *= 1099511628211ULL;
  }
  return h;
}

// xoshiro256** by Blackman & Vigna; state seeded through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next_u64() {
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

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer on {0, ..., n-1}; n >= 1
  int uniform_int(int n) {
    int v = static_cast<int>(uniform() * static_cast<double>(n));
    return v >= n ? n - 1 : v;
  }

  // standard normal via Box-Muller (no caching: call order independent state use)
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// Counter-based standard normal: a pure function of (seed, stream, index).
// Used by the noninformative learners, whose draws are pinned per
// (seed, learner index, time index) regardless of evaluation order.
inline double normal_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t s = mix_seed(seed, stream, index);
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  double u1 = static_cast<double>(a >> 11) * 0x1.0p-53;
  double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Circular block sample of positions {0,...,n-1}: concatenates ceil(out_len/b)
// blocks of b consecutive positions (wrapping), each started uniformly at
// random, truncated to out_len entries.
inline std::vector<int> circular_block_positions(int n, int b, int out_len, Rng& rng) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(out_len));
  while (static_cast<int>(out.size()) < out_len) {
    int start = rng.uniform_int(n);
    for (int i = 0; i < b && static_cast<int>(out.size()) < out_len; ++i)
      out.push_back((start + i) % n);
  }
  return out;
}

}  // namespace synlearn
