#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pclt/bitvector.hpp"
#include "pclt/mask.hpp"
#include "pclt/model.hpp"
#include "pclt/tensor.hpp"

namespace pclt {

/// Compressed-row matrix. Row r holds columns col_indices[row_offsets[r] ..
/// row_offsets[r+1]) in strictly increasing order.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> row_offsets;
  std::vector<std::uint32_t> col_indices;
  std::vector<float> values;

  std::size_t nnz() const noexcept { return values.size(); }
  /// Throws Corruption when an offset or index invariant is broken.
  void validate() const;
  Tensor to_dense() const;
};

/// Keeps exactly the entries whose keep bit is set, stored zeros included.
/// Throws Shape for non-2-D weights or a mismatched mask.
SparseMatrix to_sparse(const Tensor& weights, const BitVector& keep);

/// y[m×cols] = x[m×rows] · W. Each output accumulates its terms with fused
/// multiply-add in ascending row order of W, the order the dense kernel uses,
/// and skips zero activations.
void spmm(const float* x, std::size_t m, const SparseMatrix& w, float* y);

enum class WeightFormat { Dense, Sparse };

std::string_view to_string(WeightFormat f);

/// Frozen m ⊙ θ copy of a model for inference, with weight matrices held
/// dense or compressed. Remembers the content hash of its source weights.
class InferenceModel {
 public:
  static InferenceModel compile(const Model& model, const Mask& mask, WeightFormat format);

  /// batch [B×N×3] -> logits [B×C].
  Tensor forward(const Tensor& batch) const;

  WeightFormat format() const noexcept { return format_; }
  std::uint64_t source_hash() const noexcept { return source_hash_; }
  std::size_t nnz() const;
  const ModelSpec& spec() const noexcept { return spec_; }

 private:
  struct Layer {
    std::size_t in = 0, out = 0;
    Tensor dense;
    SparseMatrix sparse;
    std::vector<float> scale, shift, bias;
    bool edge = false;
    bool relu = true;
  };

  void linear(const Layer& layer, const float* x, std::size_t m, float* y) const;

  ModelSpec spec_;
  WeightFormat format_ = WeightFormat::Dense;
  std::vector<Layer> conv_;
  std::vector<Layer> fc_;
  std::uint64_t source_hash_ = 0;
};

/// Compiled sparse forward. Throws Staleness if `source` changed after compile.
Tensor sparse_forward(const InferenceModel& compiled, const Model& source, const Tensor& batch);

struct BenchOptions {
  std::size_t warmup = 10;
  std::size_t iterations = 30;
  std::uint64_t seed = 1;
};

struct BenchRow {
  std::string model;
  double sparsity_pct = 0.0;
  std::size_t batch = 0;
  double dense_us_median = 0.0;
  double sparse_us_median = 0.0;
  double speedup = 0.0;
  double dense_us_p90 = 0.0;
  double sparse_us_p90 = 0.0;
};

/// Times dense against sparse compiled forwards of one masked model.
std::vector<BenchRow> bench_masked(const std::string& label, const Model& model, const Mask& mask,
                                   std::span<const std::size_t> batch_sizes, const BenchOptions& options = {});

/// For each sparsity level, a global magnitude cut of the model's current
/// weights followed by bench_masked.
std::vector<BenchRow> bench_forward(const std::string& label, const Model& model, std::span<const double> sparsity_pct,
                                    std::span<const std::size_t> batch_sizes, const BenchOptions& options = {});

struct MatmulTiming {
  double dense_us_median = 0.0;
  double sparse_us_median = 0.0;
  double speedup = 0.0;
};

/// Single-layer timing: x[batch×width] · W[width×width] at the given sparsity.
MatmulTiming bench_layer(std::size_t width, std::size_t batch_rows, double sparsity_pct, const BenchOptions& options = {});

inline constexpr std::string_view kBenchHeader =
    "model,sparsity_pct,batch,dense_us_median,sparse_us_median,speedup,dense_us_p90,sparse_us_p90";

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace pclt
