#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pclt/tensor.hpp"

namespace pclt {

class BitVector;
class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while its Graph lives.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return graph_ != nullptr; }
  Graph& graph() const noexcept { return *graph_; }
  std::uint32_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so creation
/// order is a topological order and backward is a single reverse sweep.
/// A graph is single-use: backward() consumes it.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::uint32_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);

  /// Leaf bound to an external parameter. Gradients are accumulated into
  /// param.grad() on backward. With `keep`, the node's value is param ⊙ keep
  /// and the gradient reaching param is masked the same way.
  Var parameter(Tensor& param, const BitVector* keep = nullptr);

  void backward(Var loss);
  bool consumed() const noexcept { return consumed_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  const Tensor& value(std::uint32_t id) const { return nodes_[id].value; }
  /// Gradient of the last backward pass w.r.t. a node; empty if unreached.
  std::span<const float> grad(Var v) const { return nodes_[v.id()].grad; }

  // Op-author interface.
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);
  bool needs_grad(std::uint32_t id) const { return nodes_[id].needs_grad; }
  bool has_grad(std::uint32_t id) const { return !nodes_[id].grad.empty(); }
  /// Zero-initialized on first access.
  std::span<float> grad_buffer(std::uint32_t id);
  std::span<const float> upstream(std::uint32_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Tensor value;
    std::vector<float> grad;
    bool needs_grad = false;
    BackwardFn backward;
    Tensor* param = nullptr;
    const BitVector* keep = nullptr;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Differentiable ops. All 2-D arguments are row-major [rows × cols].

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// x[m×n] + bias[n] broadcast over rows.
Var add_bias(Var x, Var bias);
/// x[m×n] * scale[n] + shift[n], per column.
Var affine(Var x, Var scale, Var shift);
Var relu(Var x);
/// relu(affine(x, scale, shift)) as a single node.
Var affine_relu(Var x, Var scale, Var shift);
/// Column-wise max of [N×D] -> [D]. Gradient goes to the first argmax row.
Var reduce_max_over_points(Var features);
/// Column-wise max within consecutive groups of `group` rows: [G·group × D] -> [G × D].
Var max_over_groups(Var x, std::size_t group);
/// Row gather [R×D] -> [indices.size() × D]; backward scatter-adds.
Var gather_rows(Var x, std::vector<std::uint32_t> indices);
Var concat_cols(Var a, Var b);
Var reshape(Var x, Shape shape);
Var sum(Var x);
Var square(Var x);
/// Mean over rows of -log softmax(logits)[label].
Var cross_entropy_loss(Var logits, std::span<const int> labels);

}  // namespace pclt
