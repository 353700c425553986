#pragma once
// Counter-based SplitMix64 generator. Values depend only on (seed, stream,
// counter), so draws can be taken in any order or from any thread and still
// reproduce bit-for-bit.

#include <cstdint>

namespace lsfm {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(splitmix64(seed ^ splitmix64(stream + 0x5851F42D4C957F2Dull))) {}

  constexpr std::uint64_t next_u64() { return splitmix64(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }
  constexpr double uniform() { return to_unit(next_u64()); }
  constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace lsfm
