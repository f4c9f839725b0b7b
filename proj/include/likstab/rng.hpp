#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace likstab {

/// Philox4x32-10 counter-based generator (Salmon et al. 2011), exposed as a
/// UniformRandomBitGenerator producing 64-bit words.
///
/// The key is the stream seed; the counter walks upward from zero. Two
/// generators with different keys are statistically independent, which is
/// what lets every replicate own its stream regardless of which thread runs it.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  explicit Philox4x32(std::uint64_t key = 0) : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 2) {
      refill();
      pos_ = 0;
    }
    const auto lo = static_cast<std::uint64_t>(block_[2 * pos_]);
    const auto hi = static_cast<std::uint64_t>(block_[2 * pos_ + 1]);
    ++pos_;
    return lo | (hi << 32);
  }

  /// Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_{0, 0, 0, 0};
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 2;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Stable seed for replicate `index` of the stream named `label`.
std::uint64_t stream_seed(std::uint64_t master, std::string_view label, std::uint64_t index);

inline Philox4x32 make_stream(std::uint64_t master, std::string_view label, std::uint64_t index) {
  return Philox4x32(stream_seed(master, label, index));
}

/// Uniform draw on the open interval (0, 1), 53-bit resolution.
inline double uniform_open(Philox4x32& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace likstab
