#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace concal {

// SplitMix64, used to expand seeds and derive stream keys.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a 64-bit, used for component tags and config hashes.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// xoshiro256++ with hand-rolled distributions. The standard <random>
// distributions are implementation-defined, so simulator output would not be
// portable across standard libraries; these are fully pinned.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  // Named stream derived from (base seed, trial, component). Streams are
  // independent of one another: adding a component never perturbs existing
  // streams.
  static Rng stream(std::uint64_t base_seed, std::uint64_t trial, std::string_view component) {
    std::uint64_t s = base_seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (trial * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL);
    std::uint64_t b = splitmix64(s);
    return Rng(b ^ fnv1a64(component));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n); n >= 1.
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller (cached spare).
  double normal();

  // Exponential with mean 1.
  double exponential();

  // Poisson via Knuth's product method; intended for small means (< ~30).
  int poisson(double mean);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace concal
