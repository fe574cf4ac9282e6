#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace msnfa {

// Seedable 64-bit generator with reproducible output.  std::mt19937_64 is
// fully specified by the standard, and the normal/uniform transforms below are
// written out explicitly, so the same seed gives bit-identical streams on any
// conforming platform (std::normal_distribution would not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Independent substream: the seed is offset by (index+1) times the 64-bit
  // golden-ratio constant before seeding.  Used to give each mixture
  // component, restart, or grid cell its own stream.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(seed ^ ((index + 1) * UINT64_C(0x9E3779B97F4A7C15)));
  }

  // Uniform on [0, 1): top 53 bits of one 64-bit draw.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; one pair of draws yields two values.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so log(u1) is finite.
    double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in {0, ..., n-1}.
  int index(int n) { return static_cast<int>(uniform() * n); }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace msnfa
