#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ipruning {

/// Seeded deterministic random stream. All draws are implemented on top of the
/// raw mt19937_64 output so that sequences are identical across platforms and
/// standard-library versions (std::uniform_real_distribution and
/// std::normal_distribution make no such guarantee).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  /// Uniform double in [0, 1), 53 bits of randomness.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) { return gen_() % n; }

  /// Standard normal via Box-Muller; second value of each pair is cached.
  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t seed() const { return seed_; }

  /// Independent substream identified by (a, b), derived from this stream's
  /// seed (not its current state), so derivation order never matters.
  RngStream derive(std::uint64_t a, std::uint64_t b = 0) const {
    std::uint64_t x = seed_;
    x = splitmix(x ^ (0x9E3779B97F4A7C15ULL + a));
    x = splitmix(x ^ (0xD1B54A32D192ED03ULL + b));
    return RngStream(x);
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace ipruning
