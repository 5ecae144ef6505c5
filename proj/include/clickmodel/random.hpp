#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3", SC'11). Output is a pure function of a
// 64-bit key and a 128-bit counter, so every session gets an independent,
// reproducible substream regardless of scheduling or platform.

#include <array>
#include <cstdint>

namespace clickmodel {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32 block with 10 rounds.
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Sequential stream over counters (stream_lo, stream_hi, 0, 0),
/// (stream_lo, stream_hi, 1, 0), ... under key = seed.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, bound), unbiased (rejection sampling). bound > 0.
  std::uint64_t below(std::uint64_t bound);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  void refill();

  PhiloxKey key_;
  PhiloxCounter counter_;
  PhiloxCounter block_{};
  int used_ = 4;
};

}  // namespace clickmodel
