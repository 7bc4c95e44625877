#include "pclt/tensor.hpp"

#include <cmath>
#include <cstring>

#include "pclt/error.hpp"

namespace pclt {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
  for (auto d : shape_) {
    if (d == 0) throw Error(ErrorKind::Shape, "zero extent in shape " + shape_string(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d == 0) throw Error(ErrorKind::Shape, "zero extent in shape " + shape_string(shape_));
  }
  if (shape_numel(shape_) != data_.size()) {
    throw Error(ErrorKind::Shape, "shape " + shape_string(shape_) + " does not match " +
                                      std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<float> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(ErrorKind::Shape, "ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<float> values) {
  return Tensor({values.size()}, std::vector<float>(values));
}

std::span<float> Tensor::ensure_grad() {
  if (!grad_) grad_.emplace(data_.size(), 0.0f);
  return *grad_;
}

std::span<float> Tensor::grad() {
  if (!grad_) throw Error(ErrorKind::UninitializedGrad, "tensor " + shape_string(shape_) + " has no gradient buffer");
  return *grad_;
}

std::span<const float> Tensor::grad() const {
  if (!grad_) throw Error(ErrorKind::UninitializedGrad, "tensor " + shape_string(shape_) + " has no gradient buffer");
  return *grad_;
}

void Tensor::zero_grad() {
  if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0f);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw Error(ErrorKind::Shape, "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Tensor::bit_equal(const Tensor& other) const noexcept {
  return shape_ == other.shape_ &&
         (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0);
}

}  // namespace pclt
