#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace ytlc {

/// Counter-style deterministic generator (splitmix64). Identical seed and
/// call sequence produce identical streams on every platform, which the
/// reproducibility contracts depend on; stdlib distributions are not
/// portable across implementations.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  /// Standard normal via Box-Muller; consumes two draws per call.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Derives an independent sub-seed from a parent seed and a label, so
  /// module-level determinism composes from a single top-level --seed.
  static std::uint64_t derive(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : label) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

}  // namespace ytlc
