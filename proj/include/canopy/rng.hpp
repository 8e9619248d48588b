#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace canopy {

/// Seeded, splittable random stream. Substreams are keyed off the stream's
/// origin seed, not its consumption state, so the draw order of one tensor
/// never perturbs another's. All draws are reproducible across platforms:
/// the generator is splitmix64 and every distribution is built on it
/// directly (no std::*_distribution).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed), origin_(seed) {}

  static std::uint64_t hash_key(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  RngStream substream(std::uint64_t key) const {
    std::uint64_t mixed = origin_ ^ (key * 0x9E3779B97f4A7C15ULL + 0x6A09E667F3BCC909ULL);
    return RngStream(finalize(mixed));
  }

  RngStream substream(std::string_view name) const { return substream(hash_key(name)); }

  RngStream substream(std::string_view name, std::uint64_t index) const {
    return substream(hash_key(name) + 0x9E3779B97f4A7C15ULL * (index + 1));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97f4A7C15ULL;
    return finalize(state_);
  }

  /// Uniform on the open interval (0,1); never returns an endpoint.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on [0,1).
  double uniform_halfopen() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (lo,hi); returns exactly lo when hi == lo.
  double uniform(double lo, double hi) { return lo + uniform_open() * (hi - lo); }

  bool bernoulli(double p) { return uniform_halfopen() < p; }

  double normal() {
    double u1 = uniform_open();
    double u2 = uniform_halfopen();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Normal with samples beyond two standard deviations rejected and redrawn.
  double truncated_normal(double mean, double stddev) {
    for (;;) {
      double z = normal();
      if (std::fabs(z) <= 2.0) return mean + stddev * z;
    }
  }

 private:
  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  std::uint64_t origin_;
};

}  // namespace canopy
