#include <benchmark/benchmark.h>

#include "pclt/pruning.hpp"
#include "pclt/sparse.hpp"

namespace {

using namespace pclt;

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

Mask cut(const Model& model, double sparsity_pct) {
  const Mask ones = Mask::ones(model.params());
  if (sparsity_pct <= 0.0) return ones;
  return apply_prune(ones, model.params(),
                     magnitude_threshold(model.params(), ones, sparsity_pct / 100.0, Scope::Global));
}

void forward(benchmark::State& state, Architecture arch, WeightFormat format) {
  ModelSpec spec;
  spec.architecture = arch;
  spec.init_seed = 1;
  const Model model(spec);
  const Mask mask = cut(model, static_cast<double>(state.range(0)));
  const auto compiled = InferenceModel::compile(model, mask, format);
  Rng rng(2);
  const Tensor batch = random_tensor({static_cast<std::size_t>(state.range(1)), spec.input_points, 3}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(compiled.forward(batch));
  state.counters["nnz"] = static_cast<double>(compiled.nnz());
}

void args(benchmark::internal::Benchmark* b) {
  for (int sparsity : {0, 90, 99}) {
    for (int batch : {1, 16}) b->Args({sparsity, batch});
  }
  b->ArgNames({"sparsity", "batch"})->Unit(benchmark::kMicrosecond);
}

}  // namespace

BENCHMARK_CAPTURE(forward, pointnet_dense, Architecture::PointNetMini, WeightFormat::Dense)->Apply(args);
BENCHMARK_CAPTURE(forward, pointnet_sparse, Architecture::PointNetMini, WeightFormat::Sparse)->Apply(args);
BENCHMARK_CAPTURE(forward, dgcnn_dense, Architecture::DgcnnMini, WeightFormat::Dense)->Apply(args);
BENCHMARK_CAPTURE(forward, dgcnn_sparse, Architecture::DgcnnMini, WeightFormat::Sparse)->Apply(args);

BENCHMARK_MAIN();
