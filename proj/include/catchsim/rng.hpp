#pragma once

#include <cstdint>
#include <random>

#include "catchsim/types.hpp"

namespace catchsim {

// Splitmix64 step, used to derive independent stream seeds from a master
// seed plus indices. Episode i's stream never depends on episode j.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                 std::uint64_t tag = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(index)) ^ splitmix64(tag));
}

/// Seeded random stream wrapping mt19937_64 with the handful of
/// distributions the simulator needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // Construct per call so the stream has no hidden cache state.
    double u1 = uniform(0.0, 1.0);
    double u2 = uniform(0.0, 1.0);
    if (u1 < 1e-300) u1 = 1e-300;
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    return mean + stddev * z;
  }

  int uniform_int(int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }

  /// Uniform over the area of an annulus r in [r_min, r_max].
  Vec3 annulus_xy(double r_min, double r_max, double z_lo, double z_hi) {
    const double u = uniform(0.0, 1.0);
    const double r = std::sqrt(r_min * r_min + u * (r_max * r_max - r_min * r_min));
    const double phi = uniform(0.0, 2.0 * kPi);
    return {r * std::cos(phi), r * std::sin(phi), uniform(z_lo, z_hi)};
  }

  /// Uniform over the volume of a ball of given radius around a center.
  Vec3 in_ball(const Vec3& center, double radius) {
    while (true) {
      Vec3 p{uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
      if (p.squaredNorm() <= 1.0) return center + radius * p;
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace catchsim
