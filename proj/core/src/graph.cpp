#include "pclt/graph.hpp"

#include <cmath>
#include <limits>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "kernels.hpp"
#include "pclt/bitvector.hpp"
#include "pclt/error.hpp"

namespace pclt {

namespace {

// Serve activation-sized blocks from the heap and keep freed memory mapped.
[[maybe_unused]] const bool kHeapTuned = [] {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  return true;
}();

}  // namespace

const Tensor& Var::value() const { return graph_->value(id_); }

Var Graph::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::parameter(Tensor& param, const BitVector* keep) {
  if (keep && keep->size() != param.numel()) {
    throw Error(ErrorKind::Shape, "mask of " + std::to_string(keep->size()) + " bits bound to parameter " +
                                      shape_string(param.shape()));
  }
  Node node;
  node.value = Tensor(param.shape(), std::vector<float>(param.data().begin(), param.data().end()));
  if (keep) {
    auto v = node.value.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!keep->test(i)) v[i] = 0.0f;
    }
  }
  node.needs_grad = true;
  node.param = &param;
  node.keep = keep;
  param.ensure_grad();
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const auto& in : inputs) {
    if (&in.graph() != this) throw Error(ErrorKind::Parameter, "op mixes variables from different graphs");
    node.needs_grad = node.needs_grad || nodes_[in.id()].needs_grad;
  }
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

std::span<float> Graph::grad_buffer(std::uint32_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(node.value.numel(), 0.0f);
  return node.grad;
}

void Graph::backward(Var loss) {
  if (consumed_) throw Error(ErrorKind::GraphConsumed, "backward already ran on this graph");
  if (&loss.graph() != this) throw Error(ErrorKind::Parameter, "loss belongs to a different graph");
  if (loss.value().numel() != 1) {
    throw Error(ErrorKind::Shape, "backward needs a scalar loss, got " + shape_string(loss.value().shape()));
  }
  consumed_ = true;
  if (!nodes_[loss.id()].needs_grad) return;
  grad_buffer(loss.id())[0] = 1.0f;
  for (std::int64_t i = loss.id(); i >= 0; --i) {
    auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.grad.empty()) continue;
    if (node.backward) node.backward(*this, static_cast<std::uint32_t>(i));
    if (node.param) {
      auto dst = node.param->ensure_grad();
      for (std::size_t j = 0; j < dst.size(); ++j) {
        if (!node.keep || node.keep->test(j)) dst[j] += node.grad[j];
      }
    }
  }
}

namespace {

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw Error(ErrorKind::Dimension, std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorKind::Dimension,
                std::string(op) + " shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

void accumulate(std::span<float> dst, std::span<const float> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw Error(ErrorKind::Dimension,
                "matmul of " + shape_string(av.shape()) + " and " + shape_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  kernels::gemm(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  const Var inputs[] = {a, b};
  return a.graph().record(std::move(out), inputs, [a, b, m, k, n](Graph& g, std::uint32_t self) {
    auto up = g.upstream(self);
    std::vector<float> tmp;
    if (g.needs_grad(a.id())) {
      const bool fresh = !g.has_grad(a.id());
      auto dst = g.grad_buffer(a.id());
      if (!fresh) tmp.resize(m * k);
      kernels::gemm_bt(up.data(), g.value(b.id()).data().data(), fresh ? dst.data() : tmp.data(), m, n, k);
      if (!fresh) accumulate(dst, tmp);
    }
    if (g.needs_grad(b.id())) {
      const bool fresh = !g.has_grad(b.id());
      auto dst = g.grad_buffer(b.id());
      if (!fresh) tmp.resize(k * n);
      kernels::gemm_at(g.value(a.id()).data().data(), up.data(), fresh ? dst.data() : tmp.data(), m, k, n);
      if (!fresh) accumulate(dst, tmp);
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  const Var inputs[] = {a, b};
  return a.graph().record(std::move(out), inputs, [a, b](Graph& g, std::uint32_t self) {
    auto up = g.upstream(self);
    if (g.needs_grad(a.id())) accumulate(g.grad_buffer(a.id()), up);
    if (g.needs_grad(b.id())) accumulate(g.grad_buffer(b.id()), up);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  const Var inputs[] = {a, b};
  return a.graph().record(std::move(out), inputs, [a, b](Graph& g, std::uint32_t self) {
    auto up = g.upstream(self);
    if (g.needs_grad(a.id())) accumulate(g.grad_buffer(a.id()), up);
    if (g.needs_grad(b.id())) {
      auto d = g.grad_buffer(b.id());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= up[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  const Var inputs[] = {a, b};
  return a.graph().record(std::move(out), inputs, [a, b](Graph& g, std::uint32_t self) {
    auto up = g.upstream(self);
    if (g.needs_grad(a.id())) {
      auto d = g.grad_buffer(a.id());
      auto bv = g.value(b.id()).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += up[i] * bv[i];
    }
    if (g.needs_grad(b.id())) {
      auto d = g.grad_buffer(b.id());
      auto av = g.value(a.id()).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += up[i] * av[i];
    }
  });
}

Var add_bias(Var x, Var bias) {
  const Tensor& xv = x.value();
  require_rank2(xv, "add_bias");
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  if (bias.value().numel() != n) {
    throw Error(ErrorKind::Dimension, "add_bias of " + shape_string(xv.shape()) + " and " + shape_string(bias.shape()));
  }
  Tensor out = xv;
  auto o = out.data();
  auto b = bias.value().data();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) o[r * n + c] += b[c];
  }
  const Var inputs[] = {x, bias};
  return x.graph().record(std::move(out), inputs, [x, bias, m, n](Graph& g, std::uint32_t self) {
    auto up = g.upstream(self);
    if (g.needs_grad(x.id())) accumulate(g.grad_buffer(x.id()), up);
    if (g.needs_grad(bias.id())) {
      auto d = g.grad_buffer(bias.id());
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) d[c] += up[r * n + c];
      }
    }
  });
}

Var affine(Var x, Var scale, Var shift) {
  const Tensor& xv = x.value();
  require_rank2(xv, "affine");
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  if (scale.value().numel() != n || shift.value().numel() != n) {
    throw Error(ErrorKind::Dimension, "affine of " + shape_string(xv.shape()) + " with scale " +
                                          shape_string(scale.shape()) + " and shift " + shape_string(shift.shape()));
  }
  Tensor out = xv;
  auto o = out.data();
  auto s = scale.value().data();
  auto t = shift.value().data();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) o[r * n + c] = std::fma(o[r * n + c], s[c], t[c]);
  }
  const Var inputs[] = {x, scale, shift};
  return x.graph().record(std::move(out), inputs, [x, scale, shift, m, n](Graph& g, std::uint32_t self) {
    auto up = g.upstream(self);
    auto s = g.value(scale.id()).data();
    auto xs = g.value(x.id()).data();
    const bool want_x = g.needs_grad(x.id());
    const bool want_scale = g.needs_grad(scale.id());
    const bool want_shift = g.needs_grad(shift.id());
    std::span<float> dx, ds, dt;
    if (want_x) dx = g.grad_buffer(x.id());
    if (want_scale) ds = g.grad_buffer(scale.id());
    if (want_shift) dt = g.grad_buffer(shift.id());
    for (std::size_t r = 0; r < m; ++r) {
      const float* u = up.data() + r * n;
      if (want_x) {
        float* d = dx.data() + r * n;
        for (std::size_t c = 0; c < n; ++c) d[c] += u[c] * s[c];
      }
      if (want_scale) {
        const float* xr = xs.data() + r * n;
        for (std::size_t c = 0; c < n; ++c) ds[c] += u[c] * xr[c];
      }
      if (want_shift) {
        for (std::size_t c = 0; c < n; ++c) dt[c] += u[c];
      }
    }
  });
}

Var affine_relu(Var x, Var scale, Var shift) {
  const Tensor& xv = x.value();
  require_rank2(xv, "affine_relu");
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  if (scale.value().numel() != n || shift.value().numel() != n) {
    throw Error(ErrorKind::Dimension, "affine_relu of " + shape_string(xv.shape()) + " with scale " +
                                          shape_string(scale.shape()) + " and shift " + shape_string(shift.shape()));
  }
  Tensor out = xv;
  auto o = out.data();
  auto s = scale.value().data();
  auto t = shift.value().data();
  for (std::size_t r = 0; r < m; ++r) {
    float* row = o.data() + r * n;
    for (std::size_t c = 0; c < n; ++c) {
      const float v = std::fma(row[c], s[c], t[c]);
      row[c] = v > 0.0f ? v : 0.0f;
    }
  }
  const Var inputs[] = {x, scale, shift};
  return x.graph().record(std::move(out), inputs, [x, scale, shift, m, n](Graph& g, std::uint32_t self) {
    auto up = g.upstream(self);
    auto s = g.value(scale.id()).data();
    auto xs = g.value(x.id()).data();
    auto os = g.value(self).data();
    std::vector<float> gate(n);
    float* __restrict gu = gate.data();
    float* __restrict dx = g.needs_grad(x.id()) ? g.grad_buffer(x.id()).data() : nullptr;
    float* __restrict ds = g.needs_grad(scale.id()) ? g.grad_buffer(scale.id()).data() : nullptr;
    float* __restrict dt = g.needs_grad(shift.id()) ? g.grad_buffer(shift.id()).data() : nullptr;
    for (std::size_t r = 0; r < m; ++r) {
      const float* __restrict u = up.data() + r * n;
      const float* __restrict orow = os.data() + r * n;
      for (std::size_t c = 0; c < n; ++c) gu[c] = orow[c] > 0.0f ? u[c] : 0.0f;
      if (dx) {
        float* __restrict d = dx + r * n;
        for (std::size_t c = 0; c < n; ++c) d[c] += gu[c] * s[c];
      }
      if (ds) {
        const float* __restrict xr = xs.data() + r * n;
        for (std::size_t c = 0; c < n; ++c) ds[c] += gu[c] * xr[c];
      }
      if (dt) {
        for (std::size_t c = 0; c < n; ++c) dt[c] += gu[c];
      }
    }
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (auto& v : out.data()) v = v > 0.0f ? v : 0.0f;
  const Var inputs[] = {x};
  return x.graph().record(std::move(out), inputs, [x](Graph& g, std::uint32_t self) {
    auto up = g.upstream(self);
    auto xs = g.value(x.id()).data();
    auto d = g.grad_buffer(x.id());
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (xs[i] > 0.0f) d[i] += up[i];
    }
  });
}

Var max_over_groups(Var x, std::size_t group) {
  const Tensor& xv = x.value();
  require_rank2(xv, "max_over_groups");
  const std::size_t rows = xv.dim(0), cols = xv.dim(1);
  if (group == 0 || rows % group != 0) {
    throw Error(ErrorKind::Dimension, "cannot split " + std::to_string(rows) + " rows into groups of " +
                                          std::to_string(group));
  }
  const std::size_t groups = rows / group;
  Tensor out({groups, cols});
  std::vector<std::uint32_t> argmax(groups * cols);
  auto xs = xv.data();
  auto o = out.data();
  for (std::size_t gi = 0; gi < groups; ++gi) {
    const std::size_t base = gi * group;
    for (std::size_t c = 0; c < cols; ++c) {
      o[gi * cols + c] = xs[base * cols + c];
      argmax[gi * cols + c] = static_cast<std::uint32_t>(base);
    }
    for (std::size_t r = base + 1; r < base + group; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const float v = xs[r * cols + c];
        if (v > o[gi * cols + c]) {
          o[gi * cols + c] = v;
          argmax[gi * cols + c] = static_cast<std::uint32_t>(r);
        }
      }
    }
  }
  const Var inputs[] = {x};
  return x.graph().record(std::move(out), inputs,
                          [x, cols, argmax = std::move(argmax)](Graph& g, std::uint32_t self) {
                            auto up = g.upstream(self);
                            auto d = g.grad_buffer(x.id());
                            for (std::size_t i = 0; i < argmax.size(); ++i) d[argmax[i] * cols + i % cols] += up[i];
                          });
}

Var reduce_max_over_points(Var features) {
  const Tensor& fv = features.value();
  require_rank2(fv, "reduce_max_over_points");
  const std::size_t n = fv.dim(0);
  if (n == 0) throw Error(ErrorKind::EmptyInput, "reduce_max_over_points on an empty point set");
  return reshape(max_over_groups(features, n), {fv.dim(1)});
}

Var gather_rows(Var x, std::vector<std::uint32_t> indices) {
  const Tensor& xv = x.value();
  require_rank2(xv, "gather_rows");
  const std::size_t rows = xv.dim(0), cols = xv.dim(1);
  if (indices.empty()) throw Error(ErrorKind::EmptyInput, "gather_rows with no indices");
  Tensor out({indices.size(), cols});
  auto xs = xv.data();
  auto o = out.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) throw Error(ErrorKind::Parameter, "gather index " + std::to_string(indices[i]) + " out of range");
    std::copy_n(xs.begin() + indices[i] * cols, cols, o.begin() + i * cols);
  }
  const Var inputs[] = {x};
  return x.graph().record(std::move(out), inputs,
                          [x, cols, indices = std::move(indices)](Graph& g, std::uint32_t self) {
                            auto up = g.upstream(self);
                            auto d = g.grad_buffer(x.id());
                            for (std::size_t i = 0; i < indices.size(); ++i) {
                              float* dst = d.data() + indices[i] * cols;
                              const float* src = up.data() + i * cols;
                              for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
                            }
                          });
}

Var concat_cols(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "concat_cols");
  require_rank2(bv, "concat_cols");
  if (av.dim(0) != bv.dim(0)) {
    throw Error(ErrorKind::Dimension, "concat_cols of " + shape_string(av.shape()) + " and " + shape_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), p = av.dim(1), q = bv.dim(1);
  Tensor out({m, p + q});
  auto o = out.data();
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(av.data().begin() + r * p, p, o.begin() + r * (p + q));
    std::copy_n(bv.data().begin() + r * q, q, o.begin() + r * (p + q) + p);
  }
  const Var inputs[] = {a, b};
  return a.graph().record(std::move(out), inputs, [a, b, m, p, q](Graph& g, std::uint32_t self) {
    auto up = g.upstream(self);
    if (g.needs_grad(a.id())) {
      auto d = g.grad_buffer(a.id());
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < p; ++c) d[r * p + c] += up[r * (p + q) + c];
      }
    }
    if (g.needs_grad(b.id())) {
      auto d = g.grad_buffer(b.id());
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < q; ++c) d[r * q + c] += up[r * (p + q) + p + c];
      }
    }
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const Var inputs[] = {x};
  return x.graph().record(std::move(out), inputs, [x](Graph& g, std::uint32_t self) {
    accumulate(g.grad_buffer(x.id()), g.upstream(self));
  });
}

Var sum(Var x) {
  double total = 0.0;
  for (float v : x.value().data()) total += v;
  Tensor out({1}, static_cast<float>(total));
  const Var inputs[] = {x};
  return x.graph().record(std::move(out), inputs, [x](Graph& g, std::uint32_t self) {
    const float up = g.upstream(self)[0];
    for (auto& d : g.grad_buffer(x.id())) d += up;
  });
}

Var square(Var x) {
  Tensor out = x.value();
  for (auto& v : out.data()) v *= v;
  const Var inputs[] = {x};
  return x.graph().record(std::move(out), inputs, [x](Graph& g, std::uint32_t self) {
    auto up = g.upstream(self);
    auto xs = g.value(x.id()).data();
    auto d = g.grad_buffer(x.id());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += 2.0f * xs[i] * up[i];
  });
}

Var cross_entropy_loss(Var logits, std::span<const int> labels) {
  const Tensor& lv = logits.value();
  require_rank2(lv, "cross_entropy_loss");
  const std::size_t batch = lv.dim(0), classes = lv.dim(1);
  if (labels.size() != batch) {
    throw Error(ErrorKind::Dimension, std::to_string(labels.size()) + " labels for " + std::to_string(batch) + " rows");
  }
  for (std::size_t i = 0; i < batch; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw Error(ErrorKind::Label, "label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                                        " outside [0, " + std::to_string(classes) + ")");
    }
  }
  // Softmax probabilities are kept for the backward rule.
  std::vector<float> probs(batch * classes);
  double total = 0.0;
  auto ls = lv.data();
  for (std::size_t r = 0; r < batch; ++r) {
    const float* row = ls.data() + r * classes;
    float mx = row[0];
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(static_cast<double>(row[c]) - mx);
    const double log_z = std::log(z) + mx;
    for (std::size_t c = 0; c < classes; ++c) {
      probs[r * classes + c] = static_cast<float>(std::exp(static_cast<double>(row[c]) - log_z));
    }
    total += log_z - row[labels[r]];
  }
  Tensor out({1}, static_cast<float>(total / static_cast<double>(batch)));
  std::vector<int> label_copy(labels.begin(), labels.end());
  const Var inputs[] = {logits};
  return logits.graph().record(
      std::move(out), inputs,
      [logits, batch, classes, probs = std::move(probs), label_copy = std::move(label_copy)](Graph& g,
                                                                                             std::uint32_t self) {
        const float scale = g.upstream(self)[0] / static_cast<float>(batch);
        auto d = g.grad_buffer(logits.id());
        for (std::size_t r = 0; r < batch; ++r) {
          for (std::size_t c = 0; c < classes; ++c) {
            const float target = static_cast<int>(c) == label_copy[r] ? 1.0f : 0.0f;
            d[r * classes + c] += scale * (probs[r * classes + c] - target);
          }
        }
      });
}

}  // namespace pclt
