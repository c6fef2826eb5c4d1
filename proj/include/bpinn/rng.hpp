#pragma once
#include <cmath>
#include <cstdint>
#include <numbers>

namespace bpinn {

// splitmix64 finalizer: our mixing primitive for deriving stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Fold any number of integer tags into a stream key. All randomness in the
// project is derived statelessly as stream_key(seed, context...), so resuming
// a run never needs serialized generator state.
template <class... Ts>
constexpr std::uint64_t stream_key(std::uint64_t first, Ts... rest) {
  std::uint64_t h = mix64(first ^ 0x2545F4914F6CDD1DULL);
  ((h = mix64(h ^ mix64(static_cast<std::uint64_t>(rest)))), ...);
  return h;
}

// Small keyed generator (splitmix64 sequence). We avoid std::uniform_*
// distributions on purpose: their output is implementation-defined, and we
// want artifacts that reproduce bit-for-bit under one toolchain and stay
// stable across its upgrades.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(mix64(key ^ 0x9E3779B97F4A7C15ULL)) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53-bit resolution
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  // size of [0, n)
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Box-Muller; second value of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = u01();
    double u2 = u01();
    double r = std::sqrt(-2.0 * std::log1p(-u1));  // 1-u1 in (0,1], no log(0)
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bpinn
