#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace hemet {

/// splitmix64 step; used for deriving independent child seeds from a master
/// seed so that parallel workers reproduce the sequential stream exactly.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (index + 1));
  return splitmix64(s);
}

/// FNV-1a over a string key; combined with the master seed to give each
/// study cell an independently reproducible stream.
inline std::uint64_t fnv1a64(std::string_view key) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Random draws used across the library. All transformations from raw
/// engine output are spelled out here (no std::*_distribution) so that
/// streams are bit-identical across standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; draws are consumed in pairs.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Unit-mean exponential by inversion.
  double exponential() {
    double u = uniform01();
    while (u >= 1.0) u = uniform01();
    return -std::log1p(-u);
  }

  /// Mean-zero Laplace with the given variance (variance = 2 * scale^2).
  double laplace(double variance) {
    const double scale = std::sqrt(variance / 2.0);
    const double u = uniform01() - 0.5;
    const double mag = -std::log1p(-2.0 * std::abs(u));
    return u < 0 ? -scale * mag : scale * mag;
  }

  std::uint64_t raw() { return eng_(); }

private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace hemet
