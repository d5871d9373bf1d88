#pragma once

#include <cstdint>

#include "heavytail/philox.hpp"

namespace heavytail::randkit {

// Counter-based random stream. The output is a pure function of
// (master_seed, stream_id, counter): the Philox key is the master seed, the
// upper 64 counter bits are the stream id and the lower 64 bits index the
// block within the stream. Distinct stream ids therefore never share blocks.
//
// Streams are plain values: copying one clones its position, and the copy
// replays the same draws.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
      : master_seed_(master_seed), stream_id_(stream_id) {}

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  // Index of the next 32-bit word to be produced (block * 4 + lane).
  std::uint64_t counter() const noexcept { return word_; }

  std::uint32_t next_u32() noexcept {
    const std::uint64_t block = word_ >> 2;
    const auto lane = static_cast<unsigned>(word_ & 3u);
    if (lane == 0 || block != cached_block_) {
      refill(block);
    }
    ++word_;
    return buffer_[lane];
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Child stream for replica `index`. The child id is a splitmix64 hash of
  // (stream_id, index), so children of different parents do not collide in
  // practice and every child is reproducible from its parent alone.
  RngStream fork(std::uint64_t index) const noexcept {
    return RngStream(master_seed_, mix(stream_id_ ^ mix(index + 0x632BE59BD9B4E019ull)));
  }

  // Skips `words` 32-bit outputs.
  void discard(std::uint64_t words) noexcept { word_ += words; }

  friend bool operator==(const RngStream& a, const RngStream& b) noexcept {
    return a.master_seed_ == b.master_seed_ && a.stream_id_ == b.stream_id_ && a.word_ == b.word_;
  }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  void refill(std::uint64_t block) noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block),
                                  static_cast<std::uint32_t>(block >> 32),
                                  static_cast<std::uint32_t>(stream_id_),
                                  static_cast<std::uint32_t>(stream_id_ >> 32)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(master_seed_),
                              static_cast<std::uint32_t>(master_seed_ >> 32)};
    buffer_ = Philox4x32::apply(ctr, key);
    cached_block_ = block;
  }

  std::uint64_t master_seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t word_ = 0;
  std::uint64_t cached_block_ = ~std::uint64_t{0};
  Philox4x32::Counter buffer_{};
};

inline RngStream derive_stream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept {
  return RngStream(master_seed, stream_id);
}

}  // namespace heavytail::randkit
