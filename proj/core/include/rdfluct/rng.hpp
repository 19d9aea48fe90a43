#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace rdfluct {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 128-bit counter is split into a 64-bit block index (low words) and a
/// 64-bit stream index (high words); the key carries the seed. Distinct
/// (seed, stream) pairs give non-overlapping sequences.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (next_ == 2) refill();
    const std::size_t i = next_++;
    return (static_cast<std::uint64_t>(block_[2 * i + 1]) << 32) | block_[2 * i];
  }

  /// Ten-round bijection of one counter block.
  static Counter encrypt(Counter counter, Key key) noexcept;

 private:
  void refill() noexcept;

  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Counter block_{};
  std::size_t next_ = 2;
};

/// Mixes a master seed with a purpose tag (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t tag) noexcept;

/// Per-trial random stream. Draw helpers are deterministic functions of the
/// underlying Philox sequence.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept : engine_(seed, stream) {}

  /// Uniform on (0, 1].
  double uniform_open_closed() noexcept { return 1.0 - uniform(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(engine_); }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  Philox4x32& engine() noexcept { return engine_; }

 private:
  Philox4x32 engine_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rdfluct
