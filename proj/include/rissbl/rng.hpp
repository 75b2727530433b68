#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace rissbl {

/// Counter-based Philox4x32-10 generator (Salmon et al., SC'11).
///
/// The 64-bit seed is the key (low word first); the 128-bit counter holds a
/// 64-bit block index in words 0-1 and a 64-bit substream id in words 2-3, so
/// `Philox4x32(seed, s)` for distinct `s` are independent streams that any
/// implementation of the same algorithm reproduces bit for bit.
///
/// Derived variates are defined by algorithm too:
///   next_u64   = (w0 << 32) | w1 of two consecutive 32-bit outputs
///   uniform    = (next_u64 >> 11) * 2^-53                 in [0, 1)
///   normal     = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)        Box-Muller, one draw
///   complex    = (normal + j normal) / sqrt(2)             CN(0, 1)
///   below(n)   = floor(uniform * n)
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0);

  /// One application of the 10-round bijection.
  static Block encrypt(Block counter, Key key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double uniform();
  double normal();
  std::complex<double> complex_normal();
  std::size_t below(std::size_t n);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  int used_ = 4;
};

/// k distinct indices drawn uniformly from `pool`, in draw order (partial Fisher-Yates).
std::vector<int> sample_without_replacement(Philox4x32& rng, std::vector<int> pool, std::size_t k);

/// k distinct indices from [0, n).
std::vector<int> sample_without_replacement(Philox4x32& rng, int n, std::size_t k);

/// Substream id used by the harness: purpose tag in the top 8 bits, sweep value
/// index in the next 24 and trial index in the low 32.
constexpr std::uint64_t substream_id(std::uint8_t purpose, std::uint32_t value_index, std::uint32_t trial) {
  return (static_cast<std::uint64_t>(purpose) << 56) |
         (static_cast<std::uint64_t>(value_index & 0xFFFFFFu) << 32) | trial;
}

namespace stream_purpose {
inline constexpr std::uint8_t kChannel = 1;
inline constexpr std::uint8_t kPilots = 2;
inline constexpr std::uint8_t kNoise = 3;
}  // namespace stream_purpose

}  // namespace rissbl
