#include "pclt/mask.hpp"

#include "pclt/error.hpp"
#include "pclt/rng.hpp"

namespace pclt {

Mask Mask::ones(const ParamStore& params) {
  Mask m;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = params[i];
    if (!e.prunable) continue;
    m.entries_.push_back(Entry{i, e.name, BitVector(e.tensor.numel(), true)});
  }
  return m;
}

const BitVector* Mask::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e.keep;
  }
  return nullptr;
}

const BitVector* Mask::for_param(std::size_t param_index) const {
  for (const auto& e : entries_) {
    if (e.param_index == param_index) return &e.keep;
  }
  return nullptr;
}

std::size_t Mask::total() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.keep.size();
  return n;
}

std::size_t Mask::kept() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.keep.count();
  return n;
}

bool Mask::aligned_with(const ParamStore& params) const {
  std::size_t next = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (!p.prunable) continue;
    if (next >= entries_.size()) return false;
    const auto& e = entries_[next++];
    if (e.param_index != i || e.name != p.name || e.keep.size() != p.tensor.numel()) return false;
  }
  return next == entries_.size();
}

void Mask::check_aligned(const ParamStore& params) const {
  if (!aligned_with(params)) throw Error(ErrorKind::Provenance, "mask is not aligned with the parameter store");
}

bool Mask::subset_of(const Mask& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name || !entries_[i].keep.subset_of(other.entries_[i].keep)) return false;
  }
  return true;
}

std::uint64_t Mask::hash() const {
  Fnv1a h;
  h.update_value(static_cast<std::uint64_t>(round_));
  for (const auto& e : entries_) {
    h.update(e.name.data(), e.name.size());
    h.update_value(static_cast<std::uint64_t>(e.keep.size()));
    auto w = e.keep.words();
    h.update(w.data(), w.size() * sizeof(std::uint64_t));
  }
  return h.digest();
}

bool Mask::operator==(const Mask& other) const {
  if (round_ != other.round_ || entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.param_index != b.param_index || a.name != b.name || !(a.keep == b.keep)) return false;
  }
  return true;
}

}  // namespace pclt
