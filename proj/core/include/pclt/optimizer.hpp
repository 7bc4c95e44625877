#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "pclt/param_store.hpp"

namespace pclt {

enum class OptimizerKind { Adam, SGD };

std::string_view to_string(OptimizerKind k);
OptimizerKind optimizer_kind_from_string(std::string_view s);

/// SGD or bias-corrected Adam (β1 = 0.9, β2 = 0.999, ε = 1e-8).
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, float learning_rate);

  OptimizerKind kind() const noexcept { return kind_; }
  float learning_rate() const noexcept { return lr_; }
  void set_learning_rate(float lr) noexcept { lr_ = lr; }
  std::uint64_t step_count() const noexcept { return steps_; }
  bool has_moments() const noexcept { return !first_.empty(); }

  /// Updates every entry from its grad buffer, then zeroes the grads.
  void step(ParamStore& params);
  /// Drops moment buffers and the step counter.
  void reset();

  static constexpr float kBeta1 = 0.9f;
  static constexpr float kBeta2 = 0.999f;
  static constexpr float kEps = 1e-8f;

 private:
  OptimizerKind kind_;
  float lr_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<float>> first_;
  std::vector<std::vector<float>> second_;
};

}  // namespace pclt
