#pragma once

#include <cmath>
#include <cstdint>

namespace asbcd {

// Counter-based generator: splitmix64 over a mixed (seed, stream, epoch) key.
// Every worker gets an independent stream that is reproducible regardless of
// scheduling, so p=1 runs replay exactly.
class Rng {
 public:
  Rng() = default;
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t epoch) {
    state_ = mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) ^ mix(stream + 0x2545f4914f6cdd1dULL)) ^
             mix(epoch + 0x6a09e667f3bcc909ULL);
    if (state_ == 0) state_ = 0x853c49e6748fea9bULL;
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // uniform in [0, n)
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // standard normal, Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = next_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0x853c49e6748fea9bULL;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace asbcd
