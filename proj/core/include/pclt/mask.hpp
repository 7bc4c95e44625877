#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pclt/bitvector.hpp"
#include "pclt/param_store.hpp"

namespace pclt {

/// Binary keep-mask over the prunable entries of a ParamStore (1 = kept).
class Mask {
 public:
  struct Entry {
    std::size_t param_index = 0;
    std::string name;
    BitVector keep;
  };

  Mask() = default;
  /// All-ones mask over every prunable entry, round 0.
  static Mask ones(const ParamStore& params);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<Entry>& entries() noexcept { return entries_; }

  const BitVector* find(std::string_view name) const;
  /// Keep-bits for a ParamStore index, or nullptr for non-prunable entries.
  const BitVector* for_param(std::size_t param_index) const;

  std::size_t round_index() const noexcept { return round_; }
  void set_round_index(std::size_t r) noexcept { round_ = r; }

  std::size_t total() const;
  std::size_t kept() const;

  /// Throws Provenance if entries do not line up with the store's prunable entries.
  void check_aligned(const ParamStore& params) const;
  bool aligned_with(const ParamStore& params) const;

  /// Elementwise this ≤ other.
  bool subset_of(const Mask& other) const;
  std::uint64_t hash() const;

  bool operator==(const Mask& other) const;

 private:
  std::vector<Entry> entries_;
  std::size_t round_ = 0;
};

}  // namespace pclt
