#include "pclt/sparse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "kernels.hpp"
#include "pclt/error.hpp"
#include "pclt/pruning.hpp"
#include "pclt/rng.hpp"

namespace pclt {

void SparseMatrix::validate() const {
  if (row_offsets.size() != rows + 1 || row_offsets.front() != 0) {
    throw Error(ErrorKind::Corruption, "row_offsets must have rows + 1 entries starting at 0");
  }
  if (row_offsets.back() != values.size() || col_indices.size() != values.size()) {
    throw Error(ErrorKind::Corruption, "row_offsets end, col_indices and values disagree on nnz");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_offsets[r] > row_offsets[r + 1]) throw Error(ErrorKind::Corruption, "row_offsets decrease at row " + std::to_string(r));
    for (std::size_t i = row_offsets[r]; i < row_offsets[r + 1]; ++i) {
      if (col_indices[i] >= cols) throw Error(ErrorKind::Corruption, "column index out of range in row " + std::to_string(r));
      if (i > row_offsets[r] && col_indices[i] <= col_indices[i - 1]) {
        throw Error(ErrorKind::Corruption, "column indices not strictly increasing in row " + std::to_string(r));
      }
    }
  }
}

Tensor SparseMatrix::to_dense() const {
  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = row_offsets[r]; i < row_offsets[r + 1]; ++i) out.data()[r * cols + col_indices[i]] = values[i];
  }
  return out;
}

SparseMatrix to_sparse(const Tensor& weights, const BitVector& keep) {
  if (weights.rank() != 2) throw Error(ErrorKind::Shape, "to_sparse needs a matrix, got " + shape_string(weights.shape()));
  if (keep.size() != weights.numel()) {
    throw Error(ErrorKind::Shape, "mask of " + std::to_string(keep.size()) + " bits for " + shape_string(weights.shape()));
  }
  SparseMatrix s;
  s.rows = weights.dim(0);
  s.cols = weights.dim(1);
  s.row_offsets.reserve(s.rows + 1);
  s.row_offsets.push_back(0);
  const std::size_t nnz = keep.count();
  s.col_indices.reserve(nnz);
  s.values.reserve(nnz);
  const auto w = weights.data();
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      if (keep.test(r * s.cols + c)) {
        s.col_indices.push_back(static_cast<std::uint32_t>(c));
        s.values.push_back(w[r * s.cols + c]);
      }
    }
    s.row_offsets.push_back(static_cast<std::uint32_t>(s.values.size()));
  }
  return s;
}

namespace {

template <int R>
void spmm_rows(const float* x, std::size_t i0, const SparseMatrix& w, float* y) {
  const std::size_t k = w.rows, n = w.cols;
  std::fill(y + i0 * n, y + (i0 + R) * n, 0.0f);
  for (std::size_t p = 0; p < k; ++p) {
    float xs[R];
    bool any = false;
    for (int r = 0; r < R; ++r) {
      xs[r] = x[(i0 + r) * k + p];
      any = any || xs[r] != 0.0f;
    }
    if (!any) continue;
    for (std::uint32_t i = w.row_offsets[p]; i < w.row_offsets[p + 1]; ++i) {
      const std::size_t j = w.col_indices[i];
      const float v = w.values[i];
      for (int r = 0; r < R; ++r) {
        float& acc = y[(i0 + r) * n + j];
        acc = std::fma(xs[r], v, acc);
      }
    }
  }
}

}  // namespace

void spmm(const float* x, std::size_t m, const SparseMatrix& w, float* y) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) spmm_rows<4>(x, i, w, y);
  for (; i < m; ++i) spmm_rows<1>(x, i, w, y);
}

std::string_view to_string(WeightFormat f) { return f == WeightFormat::Dense ? "dense" : "sparse"; }

InferenceModel InferenceModel::compile(const Model& model, const Mask& mask, WeightFormat format) {
  mask.check_aligned(model.params());
  InferenceModel im;
  im.spec_ = model.spec();
  im.format_ = format;
  im.source_hash_ = model.params().content_hash();
  const auto& params = model.params();

  auto weight_layer = [&](std::size_t idx, Layer& layer) {
    const Tensor& w = params[idx].tensor;
    layer.in = w.dim(0);
    layer.out = w.dim(1);
    const BitVector* keep = mask.for_param(idx);
    const BitVector ones(w.numel(), true);
    const BitVector& bits = keep ? *keep : ones;
    if (format == WeightFormat::Sparse) {
      layer.sparse = to_sparse(w, bits);
    } else {
      layer.dense = Tensor(w.shape(), std::vector<float>(w.data().begin(), w.data().end()));
      auto d = layer.dense.data();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!bits.test(i)) d[i] = 0.0f;
      }
    }
  };
  auto copy = [&](std::size_t idx) {
    const auto d = params[idx].tensor.data();
    return std::vector<float>(d.begin(), d.end());
  };

  for (const auto& st : model.plan().conv) {
    Layer layer;
    weight_layer(st.weight, layer);
    layer.scale = copy(st.scale);
    layer.shift = copy(st.shift);
    layer.edge = st.kind == StageKind::Edge;
    im.conv_.push_back(std::move(layer));
  }
  for (const auto& st : model.plan().fc) {
    Layer layer;
    weight_layer(st.weight, layer);
    layer.bias = copy(st.bias);
    layer.relu = st.relu;
    im.fc_.push_back(std::move(layer));
  }
  return im;
}

std::size_t InferenceModel::nnz() const {
  std::size_t n = 0;
  for (const auto* group : {&conv_, &fc_}) {
    for (const auto& l : *group) {
      if (format_ == WeightFormat::Sparse) {
        n += l.sparse.nnz();
      } else {
        for (float v : l.dense.data()) n += v != 0.0f ? 1 : 0;
      }
    }
  }
  return n;
}

void InferenceModel::linear(const Layer& layer, const float* x, std::size_t m, float* y) const {
  if (format_ == WeightFormat::Sparse) {
    spmm(x, m, layer.sparse, y);
  } else {
    kernels::gemm(x, layer.dense.data().data(), y, m, layer.in, layer.out);
  }
}

Tensor InferenceModel::forward(const Tensor& batch) const {
  if (batch.rank() != 3 || batch.dim(2) != 3) {
    throw Error(ErrorKind::Shape, "batch must be [B×N×3], got " + shape_string(batch.shape()));
  }
  const std::size_t b = batch.dim(0), n = batch.dim(1), k = spec_.k_neighbors;
  std::vector<float> x(batch.data().begin(), batch.data().end());
  std::size_t width = 3;
  std::vector<std::uint32_t> nbr;
  std::vector<float> edge, h;

  for (const auto& layer : conv_) {
    std::size_t rows = b * n;
    const float* input = x.data();
    if (layer.edge) {
      if (nbr.empty()) {
        if (k >= n) throw Error(ErrorKind::Parameter, "k_neighbors must be below the cloud size " + std::to_string(n));
        for (std::size_t c = 0; c < b; ++c) {
          Tensor cloud({n, 3}, std::vector<float>(batch.data().begin() + static_cast<std::ptrdiff_t>(c * n * 3),
                                                   batch.data().begin() + static_cast<std::ptrdiff_t>((c + 1) * n * 3)));
          for (auto j : knn_indices(cloud, k).data) nbr.push_back(static_cast<std::uint32_t>(c * n + j));
        }
      }
      rows = b * n * k;
      edge.assign(rows * 2 * width, 0.0f);
      for (std::size_t e = 0; e < rows; ++e) {
        const float* ctr = x.data() + (e / k) * width;
        const float* other = x.data() + nbr[e] * width;
        float* dst = edge.data() + e * 2 * width;
        for (std::size_t c = 0; c < width; ++c) {
          dst[c] = ctr[c];
          dst[width + c] = other[c] - ctr[c];
        }
      }
      input = edge.data();
    }
    h.assign(rows * layer.out, 0.0f);
    linear(layer, input, rows, h.data());
    for (std::size_t r = 0; r < rows; ++r) {
      float* row = h.data() + r * layer.out;
      for (std::size_t c = 0; c < layer.out; ++c) {
        const float v = std::fma(row[c], layer.scale[c], layer.shift[c]);
        row[c] = v > 0.0f ? v : 0.0f;
      }
    }
    if (layer.edge) {
      x.assign(b * n * layer.out, 0.0f);
      for (std::size_t p = 0; p < b * n; ++p) {
        float* dst = x.data() + p * layer.out;
        std::copy_n(h.data() + p * k * layer.out, layer.out, dst);
        for (std::size_t q = 1; q < k; ++q) {
          const float* src = h.data() + (p * k + q) * layer.out;
          for (std::size_t c = 0; c < layer.out; ++c) dst[c] = src[c] > dst[c] ? src[c] : dst[c];
        }
      }
    } else {
      x.swap(h);
    }
    width = layer.out;
  }

  std::vector<float> pooled(b * width);
  for (std::size_t c = 0; c < b; ++c) {
    float* dst = pooled.data() + c * width;
    std::copy_n(x.data() + c * n * width, width, dst);
    for (std::size_t p = 1; p < n; ++p) {
      const float* src = x.data() + (c * n + p) * width;
      for (std::size_t j = 0; j < width; ++j) dst[j] = src[j] > dst[j] ? src[j] : dst[j];
    }
  }
  x.swap(pooled);
  for (const auto& layer : fc_) {
    h.assign(b * layer.out, 0.0f);
    linear(layer, x.data(), b, h.data());
    for (std::size_t r = 0; r < b; ++r) {
      float* row = h.data() + r * layer.out;
      for (std::size_t c = 0; c < layer.out; ++c) {
        row[c] += layer.bias[c];
        if (layer.relu) row[c] = row[c] > 0.0f ? row[c] : 0.0f;
      }
    }
    x.swap(h);
    width = layer.out;
  }
  return Tensor({b, width}, std::move(x));
}

Tensor sparse_forward(const InferenceModel& compiled, const Model& source, const Tensor& batch) {
  if (source.params().content_hash() != compiled.source_hash()) {
    throw Error(ErrorKind::Staleness, "weights changed after the model was compiled");
  }
  return compiled.forward(batch);
}

namespace {

using Clock = std::chrono::steady_clock;

struct Stats {
  double median = 0.0;
  double p90 = 0.0;
};

template <class F>
Stats time_us(F&& f, const BenchOptions& opt) {
  for (std::size_t i = 0; i < opt.warmup; ++i) f();
  std::vector<double> us;
  us.reserve(opt.iterations);
  for (std::size_t i = 0; i < std::max<std::size_t>(1, opt.iterations); ++i) {
    const auto t0 = Clock::now();
    f();
    us.push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
  }
  std::sort(us.begin(), us.end());
  const auto at = [&](double q) { return us[static_cast<std::size_t>(std::floor(q * static_cast<double>(us.size() - 1)))]; };
  return {at(0.5), at(0.9)};
}

Tensor random_batch(std::size_t b, std::size_t n, Rng& rng) {
  Tensor t({b, n, 3});
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

}  // namespace

std::vector<BenchRow> bench_masked(const std::string& label, const Model& model, const Mask& mask,
                                   std::span<const std::size_t> batch_sizes, const BenchOptions& options) {
  const auto dense = InferenceModel::compile(model, mask, WeightFormat::Dense);
  const auto sparse = InferenceModel::compile(model, mask, WeightFormat::Sparse);
  const double sparsity = sparsity_report(mask, model.params()).global_pct;
  std::vector<BenchRow> rows;
  Rng rng(options.seed);
  for (auto b : batch_sizes) {
    const Tensor batch = random_batch(b, model.spec().input_points, rng);
    BenchRow row;
    row.model = label;
    row.sparsity_pct = sparsity;
    row.batch = b;
    const auto d = time_us([&] { return dense.forward(batch); }, options);
    const auto s = time_us([&] { return sparse.forward(batch); }, options);
    row.dense_us_median = d.median;
    row.dense_us_p90 = d.p90;
    row.sparse_us_median = s.median;
    row.sparse_us_p90 = s.p90;
    row.speedup = s.median > 0.0 ? d.median / s.median : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::vector<BenchRow> bench_forward(const std::string& label, const Model& model, std::span<const double> sparsity_pct,
                                    std::span<const std::size_t> batch_sizes, const BenchOptions& options) {
  std::vector<BenchRow> rows;
  for (double level : sparsity_pct) {
    Mask mask = Mask::ones(model.params());
    if (level > 0.0) {
      mask = apply_prune(mask, model.params(), magnitude_threshold(model.params(), mask, level / 100.0, Scope::Global));
    }
    auto part = bench_masked(label, model, mask, batch_sizes, options);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

MatmulTiming bench_layer(std::size_t width, std::size_t batch_rows, double sparsity_pct, const BenchOptions& options) {
  Rng rng(options.seed);
  Tensor w({width, width});
  BitVector keep(width * width);
  for (std::size_t i = 0; i < w.numel(); ++i) {
    if (rng.uniform() * 100.0 >= sparsity_pct) {
      keep.set(i);
      w.data()[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    }
  }
  std::vector<float> x(batch_rows * width), y(batch_rows * width);
  for (auto& v : x) v = static_cast<float>(rng.uniform(0.1, 1.0));
  const SparseMatrix s = to_sparse(w, keep);
  MatmulTiming t;
  t.dense_us_median = time_us([&] { kernels::gemm(x.data(), w.data().data(), y.data(), batch_rows, width, width); }, options).median;
  t.sparse_us_median = time_us([&] { spmm(x.data(), batch_rows, s, y.data()); }, options).median;
  t.speedup = t.sparse_us_median > 0.0 ? t.dense_us_median / t.sparse_us_median : 0.0;
  return t;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << kBenchHeader << '\n';
  for (const auto& r : rows) {
    out << r.model << ',' << r.sparsity_pct << ',' << r.batch << ',' << r.dense_us_median << ',' << r.sparse_us_median
        << ',' << r.speedup << ',' << r.dense_us_p90 << ',' << r.sparse_us_p90 << '\n';
  }
}

}  // namespace pclt
