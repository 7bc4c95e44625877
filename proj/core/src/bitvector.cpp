#include "pclt/bitvector.hpp"

#include <bit>

#include "pclt/error.hpp"

namespace pclt {

BitVector::BitVector(std::size_t size, bool value) : size_(size), words_((size + 63) / 64, value ? ~std::uint64_t{0} : 0) {
  if (value && (size & 63)) words_.back() = (std::uint64_t{1} << (size & 63)) - 1;
}

std::size_t BitVector::count() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool BitVector::subset_of(const BitVector& other) const noexcept {
  if (size_ != other.size_) return false;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] & ~other.words_[i]) return false;
  }
  return true;
}

std::vector<std::uint8_t> BitVector::to_bytes() const {
  std::vector<std::uint8_t> out((size_ + 7) / 8, 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(words_[i / 8] >> (8 * (i % 8)));
  }
  return out;
}

BitVector BitVector::from_bytes(std::span<const std::uint8_t> bytes, std::size_t size) {
  if (bytes.size() != (size + 7) / 8) throw Error(ErrorKind::Corruption, "packed mask length mismatch");
  BitVector v(size);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    v.words_[i / 8] |= std::uint64_t{bytes[i]} << (8 * (i % 8));
  }
  if ((size & 63) && !v.words_.empty() && (v.words_.back() >> (size & 63)) != 0) {
    throw Error(ErrorKind::Corruption, "packed mask has bits set past its length");
  }
  return v;
}

}  // namespace pclt
