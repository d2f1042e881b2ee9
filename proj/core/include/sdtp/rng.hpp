#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace sdtp {

// Deterministic, seed-derivable random streams. Each logical stream gets its
// own generator keyed by a path of integers mixed into the master seed, so
// adding streams never perturbs the draws of existing ones.

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t master, std::initializer_list<uint64_t> path) {
  uint64_t s = master;
  uint64_t h = splitmix64(s);
  for (uint64_t part : path) {
    s = h ^ (part + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    h = splitmix64(s);
  }
  return h;
}

// xoshiro256++ seeded via splitmix64.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    for (auto& word : s_) word = splitmix64(seed);
  }

  uint64_t next() {
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

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Inverse-CDF exponential; rate must be positive.
  double exponential(double rate);

  // Shifted-exponential service draw.
  double shifted_exp(double rate, double shift) {
    return shift + exponential(rate);
  }

  // Index sampled from an (unnormalized is fine) probability row.
  int discrete(const std::vector<double>& probs);

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace sdtp
