#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "lowres/common.hpp"

namespace lowres {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// xoshiro256++ with splitmix64 seeding. std::mt19937 would also be portable,
// but the standard distributions are not, so we roll uniform/normal here and
// use this everywhere randomness is needed. Results are identical across
// platforms and runs for a fixed seed.
class Rng {
public:
  explicit Rng(uint64_t seed = 0) {
    uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [lo, hi] inclusive
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = uint64_t(hi - lo) + 1;
    return lo + int64_t(next_u64() % span);
  }

  size_t index(size_t n) { return size_t(next_u64() % n); }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; caches the spare draw
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 1e-300);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return mean + stddev * r * std::cos(theta);
  }

private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Substream derivation: every pipeline stage draws from an independent stream
// keyed by (master seed, label, index). Stages are therefore reproducible in
// isolation.
inline uint64_t derive_seed(uint64_t master, const std::string& label,
                            uint64_t index = 0) {
  uint64_t state = master ^ fnv1a64(label) ^ (0x632be59bd9b4e019ull * (index + 1));
  uint64_t a = splitmix64(state);
  uint64_t b = splitmix64(state);
  return a ^ ((b << 29) | (b >> 35));
}

}  // namespace lowres
