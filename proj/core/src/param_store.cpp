#include "pclt/param_store.hpp"

#include "pclt/error.hpp"
#include "pclt/rng.hpp"

namespace pclt {

std::string_view to_string(Group g) { return g == Group::Conv ? "conv" : "fc"; }

void ParamStore::add(std::string name, Tensor tensor, Group group, bool prunable) {
  if (index_of(name)) throw Error(ErrorKind::Spec, "duplicate parameter name '" + name + "'");
  entries_.push_back(ParamEntry{std::move(name), std::move(tensor), group, prunable});
}

std::optional<std::size_t> ParamStore::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  return std::nullopt;
}

Tensor& ParamStore::tensor(std::string_view name) {
  auto i = index_of(name);
  if (!i) throw Error(ErrorKind::Parameter, "no parameter named '" + std::string(name) + "'");
  return entries_[*i].tensor;
}

const Tensor& ParamStore::tensor(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw Error(ErrorKind::Parameter, "no parameter named '" + std::string(name) + "'");
  return entries_[*i].tensor;
}

std::size_t ParamStore::total_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

std::size_t ParamStore::prunable_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.prunable) n += e.tensor.numel();
  }
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) {
    e.tensor.ensure_grad();
    e.tensor.zero_grad();
  }
}

std::uint64_t ParamStore::content_hash() const {
  Fnv1a h;
  for (const auto& e : entries_) {
    h.update(e.name.data(), e.name.size());
    for (auto d : e.tensor.shape()) h.update_value(static_cast<std::uint64_t>(d));
    h.update(e.tensor.data().data(), e.tensor.numel() * sizeof(float));
  }
  return h.digest();
}

bool ParamStore::bit_equal(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.group != b.group || a.prunable != b.prunable || !a.tensor.bit_equal(b.tensor)) {
      return false;
    }
  }
  return true;
}

}  // namespace pclt
