#include "fsim/rng.hpp"

namespace fsim {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(prod);
  hi = static_cast<std::uint32_t>(prod >> 32);
}

inline void philox_round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
  std::uint32_t lo0, hi0, lo1, hi1;
  mul_hi_lo(kPhiloxM0, c[0], lo0, hi0);
  mul_hi_lo(kPhiloxM1, c[2], lo1, hi1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

void Philox4x32::refill() {
  std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(block_),
                                      static_cast<std::uint32_t>(block_ >> 32), stream_[0], stream_[1]};
  std::array<std::uint32_t, 2> key = key_;
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, key);
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  buf_ = ctr;
  pos_ = 0;
  ++block_;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t stream_fingerprint(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t a = mix64(seed);
  for (std::uint64_t token : path) {
    a = mix64(a ^ (token + 0x9E3779B97F4A7C15ull));
  }
  return a;
}

RandomStream RandomStream::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  // Two independently mixed accumulators so the effective substream identity
  // is 128 bits wide; collisions between distinct paths are then negligible
  // even across the largest runs.
  std::uint64_t a = mix64(seed);
  std::uint64_t b = mix64(seed ^ 0x452821E638D01377ull);
  for (std::uint64_t token : path) {
    a = mix64(a ^ (token + 0x9E3779B97F4A7C15ull));
    b = mix64(b + (token ^ 0x2545F4914F6CDD1Dull));
  }
  return RandomStream(a, b);
}

}  // namespace fsim
