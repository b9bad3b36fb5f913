#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace credence {

/// Seedable random stream built on std::mt19937_64 with explicit,
/// portable variate transforms (the standard library distributions are
/// implementation-defined, which would break run-to-run reproducibility
/// across toolchains).
///
/// Named substreams derive independent child seeds from the parent seed,
/// so pipeline stages (data, init, sampler ...) are individually
/// reproducible no matter how much randomness the other stages consume.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  Rng substream(std::string_view name) const {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a offset basis
    for (const char c : name) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 1099511628211ULL;
    }
    return Rng(splitmix64(seed_ ^ h));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  /// Exponential with rate 1.
  double exponential() { return -std::log(uniform_pos()); }

  /// Uniform integer on [lo, hi], inclusive, without modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % range;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % range);
  }

 private:
  static constexpr double two_pi = 6.283185307179586476925286766559;

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace credence
