#include "pclt/optimizer.hpp"

#include <cmath>

#include "pclt/error.hpp"

namespace pclt {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

OptimizerKind optimizer_kind_from_string(std::string_view s) {
  if (s == "adam" || s == "Adam") return OptimizerKind::Adam;
  if (s == "sgd" || s == "SGD") return OptimizerKind::SGD;
  throw Error(ErrorKind::Config, "unknown optimizer '" + std::string(s) + "'");
}

Optimizer::Optimizer(OptimizerKind kind, float learning_rate) : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate > 0.0f) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::Config, "learning rate must be positive and finite");
  }
}

void Optimizer::reset() {
  steps_ = 0;
  first_.clear();
  second_.clear();
}

void Optimizer::step(ParamStore& params) {
  for (const auto& e : params) {
    if (!e.tensor.has_grad()) {
      throw Error(ErrorKind::UninitializedGrad, "parameter '" + e.name + "' has no gradient buffer");
    }
  }
  ++steps_;
  if (kind_ == OptimizerKind::SGD) {
    for (auto& e : params) {
      auto w = e.tensor.data();
      auto g = e.tensor.grad();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr_ * g[i];
      e.tensor.zero_grad();
    }
    return;
  }

  if (first_.empty()) {
    for (const auto& e : params) {
      first_.emplace_back(e.tensor.numel(), 0.0f);
      second_.emplace_back(e.tensor.numel(), 0.0f);
    }
  }
  if (first_.size() != params.size()) throw Error(ErrorKind::Shape, "optimizer state does not match parameter store");

  const double t = static_cast<double>(steps_);
  const auto c1 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(kBeta1), t)));
  const auto c2 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(kBeta2), t)));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& e = params[p];
    auto w = e.tensor.data();
    auto g = e.tensor.grad();
    auto& m = first_[p];
    auto& v = second_[p];
    if (m.size() != w.size()) throw Error(ErrorKind::Shape, "optimizer moment size mismatch for '" + e.name + "'");
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0f - kBeta1) * g[i];
      v[i] = kBeta2 * v[i] + (1.0f - kBeta2) * g[i] * g[i];
      const float m_hat = m[i] * c1;
      const float v_hat = v[i] * c2;
      w[i] -= lr_ * m_hat / (std::sqrt(v_hat) + kEps);
    }
    e.tensor.zero_grad();
  }
}

}  // namespace pclt
