#pragma once

#include <cstdint>
#include <limits>

namespace stochad {

/// Counter-based random stream.
///
/// Draw i of stream (seed, stream_id) is a pure function of (seed, stream_id, i):
/// a 64-bit key is derived from the pair and each output is the SplitMix64
/// finalizer applied to key + i * golden_gamma. Streams therefore never share
/// state and a replicate's draws do not depend on how work is scheduled.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t position() const { return counter_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double standard_normal();

  // UniformRandomBitGenerator interface.
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  // Stream id for a (purpose, index) pair, e.g. the primal stream of replicate r.
  static std::uint64_t derive_id(std::uint64_t purpose, std::uint64_t index);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace stochad
