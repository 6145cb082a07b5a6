#pragma once

#include <cstdint>

namespace hflab::rng {

// splitmix64 step; the workhorse behind all per-site / per-sample streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

// uniform in the open interval (0, 1)
inline double uniform01(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Deterministic stream keyed by an arbitrary sequence of integers.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) { (void)splitmix64(state_); }
  Stream& key(std::int64_t k) {
    state_ = mix(state_, static_cast<std::uint64_t>(k));
    return *this;
  }
  std::uint64_t next_bits() { return splitmix64(state_); }
  double next_uniform() { return uniform01(next_bits()); }

 private:
  std::uint64_t state_;
};

}  // namespace hflab::rng
