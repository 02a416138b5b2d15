#pragma once

#include <cstdint>
#include <limits>

namespace rotorlab {

/// SplitMix64 (Steele, Lea & Flood 2014). Counter-based: the k-th output is
/// a pure function of seed + k, so per-particle streams derived by seeding
/// with (seed, particle index) are independent of chunking and worker
/// count. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Stateless mix, used to derive per-particle stream seeds.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    SplitMix64 g(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)));
    g.state_ += b;
    return g();
  }

 private:
  std::uint64_t state_;
};

}  // namespace rotorlab
