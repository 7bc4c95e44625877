#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pclt/error.hpp"

namespace pclt {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major f32 array with an optional gradient buffer.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  /// 2-D literal, e.g. Tensor::matrix({{1, 2}, {3, 4}}).
  static Tensor matrix(std::initializer_list<std::initializer_list<float>> rows);
  static Tensor vector(std::initializer_list<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const noexcept { return data_.size(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }
  float& at(std::size_t r, std::size_t c) { return data_[r * shape_.at(1) + c]; }
  float at(std::size_t r, std::size_t c) const { return data_[r * shape_.at(1) + c]; }

  bool requires_grad() const noexcept { return requires_grad_; }
  void set_requires_grad(bool value) noexcept { requires_grad_ = value; }

  bool has_grad() const noexcept { return grad_.has_value(); }
  /// Allocates a zeroed gradient buffer if none exists.
  std::span<float> ensure_grad();
  std::span<float> grad();
  std::span<const float> grad() const;
  void zero_grad();
  void drop_grad() noexcept { grad_.reset(); }

  /// Same data under a new shape; numel must match.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const noexcept;

  /// Bitwise equality of shape and data (grad ignored).
  bool bit_equal(const Tensor& other) const noexcept;

 private:
  Shape shape_;
  std::vector<float> data_;
  std::optional<std::vector<float>> grad_;
  bool requires_grad_ = false;
};

}  // namespace pclt
