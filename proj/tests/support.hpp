#pragma once

#include <gtest/gtest.h>

#include <functional>
#include <string>
#include <vector>

#include "pclt/error.hpp"
#include "pclt/param_store.hpp"
#include "pclt/rng.hpp"
#include "pclt/tensor.hpp"

namespace pclt::test {

inline ErrorKind error_kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a pclt::Error";
  return ErrorKind::Io;
}

#define EXPECT_PCLT_ERROR(kind, stmt) EXPECT_EQ(::pclt::test::error_kind_of([&] { stmt; }), (kind))

inline std::string error_message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

/// Store of prunable 2-D weights (sizes as rows x cols) plus a bias per layer.
inline ParamStore weight_store(const std::vector<std::pair<std::size_t, std::size_t>>& sizes, Rng& rng,
                               std::size_t conv_layers = 1) {
  ParamStore s;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const Group g = i < conv_layers ? Group::Conv : Group::FC;
    s.add("layer" + std::to_string(i) + ".weight", random_tensor({sizes[i].first, sizes[i].second}, rng), g, true);
    s.add("layer" + std::to_string(i) + ".bias", random_tensor({sizes[i].second}, rng), g, false);
  }
  return s;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

}  // namespace pclt::test
