#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pclt/tensor.hpp"

namespace pclt {

/// Layer-group label used by ablations: shared per-point MLP stages are Conv,
/// classifier head stages are FC.
enum class Group : std::uint8_t { Conv = 0, FC = 1 };

std::string_view to_string(Group g);

struct ParamEntry {
  std::string name;
  Tensor tensor;
  Group group = Group::Conv;
  bool prunable = false;
};

/// Named, ordered parameter collection. Order is insertion order and is part
/// of the contract: masks, tickets and flat-index tie-breaking follow it.
class ParamStore {
 public:
  void add(std::string name, Tensor tensor, Group group, bool prunable);

  std::size_t size() const noexcept { return entries_.size(); }
  ParamEntry& operator[](std::size_t i) { return entries_[i]; }
  const ParamEntry& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  std::optional<std::size_t> index_of(std::string_view name) const;
  Tensor& tensor(std::string_view name);
  const Tensor& tensor(std::string_view name) const;

  std::size_t total_count() const;
  std::size_t prunable_count() const;

  void zero_grad();
  /// FNV-1a over names, shapes and raw values.
  std::uint64_t content_hash() const;
  /// Same names/shapes/groups and bitwise-equal values.
  bool bit_equal(const ParamStore& other) const;

 private:
  std::vector<ParamEntry> entries_;
};

}  // namespace pclt
