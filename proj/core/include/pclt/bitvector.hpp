#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pclt {

/// Packed bit array, LSB-first within 64-bit words. Bits past size() are
/// always zero so word-level comparisons and popcounts are exact.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size, bool value = false);

  std::size_t size() const noexcept { return size_; }
  bool test(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::size_t i) noexcept { words_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  void reset(std::size_t i) noexcept { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  void assign(std::size_t i, bool v) noexcept { v ? set(i) : reset(i); }

  std::size_t count() const noexcept;
  /// Every set bit here is also set in `other`.
  bool subset_of(const BitVector& other) const noexcept;

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  /// ceil(size/8) bytes, bit i at byte i/8, position i%8.
  std::vector<std::uint8_t> to_bytes() const;
  static BitVector from_bytes(std::span<const std::uint8_t> bytes, std::size_t size);

  bool operator==(const BitVector& other) const = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace pclt
