#pragma once

#include <pnkrylov/types.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pnk {

/// Counter-based SplitMix64 stream.
///
/// Draw i of stream (seed, stream) is mix64(key + (i + 1) * 0x9E3779B97F4A7C15)
/// with key = mix64(seed ^ mix64(stream)), where mix64 is the SplitMix64
/// finalizer. The sequence is a pure function of (seed, stream, i), so any
/// language can reproduce it bit for bit.
class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : key_(mix64(seed ^ mix64(stream))) {}

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGamma); }

  /// Uniform on (0, 1]: ((u >> 11) + 1) * 2^-53.
  double next_open_unit() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Uniform on [0, 1): (u >> 11) * 2^-53.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by 128-bit multiply-shift.
  std::uint64_t next_below(std::uint64_t bound) {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>(next_u64()) * bound) >> 64);
  }

  /// Standard normal pair by Box–Muller: r = sqrt(-2 ln u1), (r cos 2πu2, r sin 2πu2).
  /// Draws come out in pairs; an odd-length request discards the sine half.
  void fill_gaussian(Eigen::Ref<Vector> out) {
    for (Index i = 0; i < out.size(); i += 2) {
      const double u1 = next_open_unit();
      const double u2 = next_unit();
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double angle = 2.0 * std::numbers::pi * u2;
      out[i] = r * std::cos(angle);
      if (i + 1 < out.size()) out[i + 1] = r * std::sin(angle);
    }
  }

  Vector gaussian(Index n) {
    Vector v(n);
    fill_gaussian(v);
    return v;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace pnk
