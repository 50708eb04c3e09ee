#pragma once

#include <array>
#include <cstdint>

namespace fsp {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Stream splitting: a RandomStream is addressed by (seed, stream). The
// 64-bit seed is the Philox key; the 128-bit counter is
// (stream_hi32, stream_lo32, block_hi32, block_lo32) where the stream id
// occupies the upper 64 bits and the block index the lower 64 bits. Distinct
// (seed, stream) pairs therefore never share a counter, and a stream can be
// regenerated without replaying any other stream.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  // Standard normal by Box-Muller; the second variate is cached.
  double normal() noexcept;

  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                             std::array<std::uint32_t, 2> key) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream ids used by the samplers. The Wigner matrix for generator v in
// trial k reads stream (k << 16) | v; its Gaussian convolution partner reads
// the same id with the top bit set.
inline std::uint64_t wigner_stream(std::uint64_t trial, std::uint64_t generator) noexcept {
  return (trial << 16) | (generator & 0xffffu);
}
inline std::uint64_t convolution_stream(std::uint64_t trial, std::uint64_t generator) noexcept {
  return wigner_stream(trial, generator) | (std::uint64_t{1} << 63);
}

}  // namespace fsp
