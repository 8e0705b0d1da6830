#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>

#include "qvi/common.hpp"

namespace qvi {

/// Seeded generator with distribution code written out by hand so that
/// streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next() { return engine_(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u));
    const double angle = 2.0 * 3.14159265358979323846 * v;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Vec normal_vec(Eigen::Index n) {
    Vec out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = normal();
    return out;
  }

  /// Uniform point in the closed unit ball of R^n.
  Vec in_unit_ball(Eigen::Index n) {
    Vec d = normal_vec(n);
    double norm = d.norm();
    while (norm == 0.0) {
      d = normal_vec(n);
      norm = d.norm();
    }
    const double radius = std::pow(uniform(), 1.0 / static_cast<double>(n));
    return d * (radius / norm);
  }

  Vec on_unit_sphere(Eigen::Index n) {
    Vec d = normal_vec(n);
    double norm = d.norm();
    while (norm == 0.0) {
      d = normal_vec(n);
      norm = d.norm();
    }
    return d / norm;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64 finalizer; combines seeds with context values.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed derived from the bit pattern of a point, so that sampling done
/// while evaluating an operator at x is a pure function of x.
inline std::uint64_t point_seed(std::uint64_t seed, const Vec& x) {
  std::uint64_t h = seed;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double v = x[i] == 0.0 ? 0.0 : x[i];  // fold -0.0
    std::uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    h = mix_seed(h, bits);
  }
  return h;
}

}  // namespace qvi
