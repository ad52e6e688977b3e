#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace fsim {

/// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
///
/// Every substream is identified by a 64-bit key and a 64-bit stream word;
/// the remaining 64 counter bits enumerate output blocks within the
/// substream. Jumping to any (key, stream) pair is O(1), which is what makes
/// schedule-independent parallel Monte Carlo possible: each unit of work owns
/// its own substream and no state is shared between workers.
class Philox4x32 {
 public:
  Philox4x32(std::uint64_t key, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        stream_{static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      refill();
    }
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

/// Mixes a 64-bit value through the splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Stable 64-bit identifier of the substream a path derives; used in run
/// manifests so any cell can be located and re-run.
std::uint64_t stream_fingerprint(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// One random substream plus the scalar samplers the simulations need.
///
/// Substreams are derived from a run seed and a path of integer tokens
/// (purpose tag, grid indices, replication indices, ...). Two distinct paths
/// yield statistically independent streams, and the derivation is pure, so
/// any worker can reconstruct any substream from the run seed alone.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed ^ 0x243f6a8885a308d3ull), mix64(seed)) {}

  static RandomStream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64() { return engine_.next_u64(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_.next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1); never returns an endpoint.
  double uniform_open() { return (static_cast<double>(engine_.next_u64() >> 12) + 0.5) * 0x1.0p-52; }

  /// Standard normal via the Marsaglia polar method.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// Exponential with unit rate.
  double exponential1() { return -std::log(uniform_open()); }

  /// Uniform on {-1, +1}.
  double rademacher() { return (engine_.next_u64() >> 63) ? 1.0 : -1.0; }

  /// Chi-square with (small) integer degrees of freedom, built from
  /// exponential pairs plus one squared normal for odd df.
  double chi_square(int df) {
    double acc = 0.0;
    for (int i = 0; i + 1 < df; i += 2) {
      acc += 2.0 * exponential1();
    }
    if (df % 2 == 1) {
      const double g = gaussian();
      acc += g * g;
    }
    return acc;
  }

  /// Student t with integer degrees of freedom.
  double student_t(int df) { return gaussian() / std::sqrt(chi_square(df) / static_cast<double>(df)); }

 private:
  RandomStream(std::uint64_t key, std::uint64_t stream) : engine_(key, stream) {}

  Philox4x32 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

namespace stream_token {
// Purpose tags for substream paths. Values are arbitrary but frozen:
// changing them changes every sampled number.
inline constexpr std::uint64_t covariance = 0x11;
inline constexpr std::uint64_t theta = 0x12;
inline constexpr std::uint64_t rotation = 0x13;
inline constexpr std::uint64_t data = 0x14;
inline constexpr std::uint64_t benchmark = 0x15;
inline constexpr std::uint64_t diag_direction = 0x16;
inline constexpr std::uint64_t diag_rotation = 0x17;
inline constexpr std::uint64_t diag_data = 0x18;
inline constexpr std::uint64_t tail_frame = 0x19;
inline constexpr std::uint64_t gap_data = 0x1a;
inline constexpr std::uint64_t diag_covariance = 0x1b;
inline constexpr std::uint64_t diag_theta = 0x1c;
}  // namespace stream_token

}  // namespace fsim
