#include <cmath>
#include <sstream>

#include "pclt/graph.hpp"
#include "pclt/pruning.hpp"
#include "pclt/sparse.hpp"
#include "support.hpp"

namespace pclt {
namespace {

ModelSpec spec_for(Architecture arch) {
  ModelSpec s;
  s.architecture = arch;
  s.conv_widths = {16, 32, 32};
  s.head_widths = {16};
  s.num_classes = 5;
  s.input_points = 48;
  s.k_neighbors = 6;
  s.init_seed = 11;
  return s;
}

Mask global_cut(const Model& m, double p) {
  const Mask ones = Mask::ones(m.params());
  return apply_prune(ones, m.params(), magnitude_threshold(m.params(), ones, p, Scope::Global));
}

TEST(ToSparse, AllOnes) {
  Rng rng(1);
  const Tensor w = test::random_tensor({3, 3}, rng);
  const auto s = to_sparse(w, BitVector(9, true));
  EXPECT_EQ(s.nnz(), 9u);
  EXPECT_NO_THROW(s.validate());
  EXPECT_TRUE(s.to_dense().bit_equal(w));
}

TEST(ToSparse, SingleSurvivorLayout) {
  Tensor w({3, 3}, 1.0f);
  w.at(1, 2) = 5.0f;
  BitVector keep(9);
  keep.set(1 * 3 + 2);
  const auto s = to_sparse(w, keep);
  EXPECT_EQ(s.row_offsets, (std::vector<std::uint32_t>{0, 0, 1, 1}));
  EXPECT_EQ(s.col_indices, std::vector<std::uint32_t>{2});
  EXPECT_EQ(s.values, std::vector<float>{5.0f});
}

TEST(ToSparse, StoredZerosAreKept) {
  Tensor w({2, 2});
  const auto s = to_sparse(w, BitVector(4, true));
  EXPECT_EQ(s.nnz(), 4u);
}

TEST(ToSparse, AllZeroMaskGivesBiasOnlyOutput) {
  Rng rng(2);
  const Tensor w = test::random_tensor({4, 3}, rng);
  const auto s = to_sparse(w, BitVector(12, false));
  EXPECT_EQ(s.nnz(), 0u);
  const Tensor x = test::random_tensor({2, 4}, rng);
  std::vector<float> y(6, 7.0f);
  spmm(x.data().data(), 2, s, y.data());
  for (float v : y) EXPECT_EQ(v, 0.0f);
}

TEST(ToSparse, Guards) {
  EXPECT_PCLT_ERROR(ErrorKind::Shape, to_sparse(Tensor({4}), BitVector(4, true)));
  EXPECT_PCLT_ERROR(ErrorKind::Shape, to_sparse(Tensor({2, 2}), BitVector(3, true)));
}

TEST(ToSparse, ValidateCatchesBrokenInvariants) {
  auto s = to_sparse(Tensor({2, 3}, 1.0f), BitVector(6, true));
  auto unsorted = s;
  std::swap(unsorted.col_indices[0], unsorted.col_indices[1]);
  EXPECT_PCLT_ERROR(ErrorKind::Corruption, unsorted.validate());
  auto offsets = s;
  offsets.row_offsets[2] = 5;
  EXPECT_PCLT_ERROR(ErrorKind::Corruption, offsets.validate());
}

TEST(Spmm, BitEqualToDenseMatmulOfMaskedWeights) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 1 + rng.below(9), k = 1 + rng.below(40), n = 1 + rng.below(40);
    Tensor w = test::random_tensor({k, n}, rng);
    Tensor x = test::random_tensor({m, k}, rng);
    for (auto& v : x.data()) {
      if (rng.uniform() < 0.3) v = 0.0f;
    }
    BitVector keep(k * n);
    for (std::size_t i = 0; i < k * n; ++i) keep.assign(i, rng.uniform() < 0.3);
    const auto s = to_sparse(w, keep);
    std::vector<float> y(m * n);
    spmm(x.data().data(), m, s, y.data());

    Graph g;
    const Tensor dense = matmul(g.constant(x), g.parameter(w, &keep)).value();
    for (std::size_t i = 0; i < m * n; ++i) ASSERT_EQ(y[i], dense[i]) << "trial " << trial;
  }
}

TEST(SparseForward, MatchesDenseAcrossSparsities) {
  Rng rng(4);
  for (auto arch : {Architecture::PointNetMini, Architecture::DgcnnMini}) {
    const Model model(spec_for(arch));
    for (double p : {0.0, 0.5, 0.9, 0.99}) {
      const Mask mask = p == 0.0 ? Mask::ones(model.params()) : global_cut(model, p);
      const auto sparse = InferenceModel::compile(model, mask, WeightFormat::Sparse);
      const auto dense = InferenceModel::compile(model, mask, WeightFormat::Dense);
      const Tensor batch = test::random_tensor({4, 48, 3}, rng);
      const Tensor reference = model.classify(&mask, batch);
      const Tensor a = sparse_forward(sparse, model, batch);
      const Tensor b = dense.forward(batch);
      for (std::size_t i = 0; i < reference.numel(); ++i) {
        EXPECT_LE(std::fabs(a[i] - reference[i]), 1e-5f);
        EXPECT_LE(std::fabs(b[i] - reference[i]), 1e-5f);
      }
      EXPECT_EQ(argmax_rows(a), argmax_rows(reference));
      EXPECT_EQ(sparse.nnz(), mask.kept());
    }
  }
}

TEST(SparseForward, StaleSourceIsRejected) {
  Model model(spec_for(Architecture::PointNetMini));
  const Mask mask = global_cut(model, 0.5);
  const auto compiled = InferenceModel::compile(model, mask, WeightFormat::Sparse);
  Rng rng(5);
  const Tensor batch = test::random_tensor({1, 48, 3}, rng);
  EXPECT_NO_THROW(sparse_forward(compiled, model, batch));
  model.params()[0].tensor[0] += 1.0f;
  EXPECT_PCLT_ERROR(ErrorKind::Staleness, sparse_forward(compiled, model, batch));
}

TEST(Bench, RowsAndHeader) {
  const Model model(spec_for(Architecture::PointNetMini));
  const std::size_t batches[] = {1, 2};
  const double levels[] = {50.0};
  BenchOptions opt;
  opt.warmup = 1;
  opt.iterations = 3;
  const auto rows = bench_forward("pointnet", model, levels, batches, opt);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].batch, 1u);
  EXPECT_NEAR(rows[0].sparsity_pct, 50.0, 0.1);
  EXPECT_GT(rows[1].dense_us_median, 0.0);
  EXPECT_GE(rows[1].dense_us_p90, rows[1].dense_us_median);
  std::ostringstream out;
  write_bench_csv(out, rows);
  EXPECT_EQ(out.str().substr(0, kBenchHeader.size()), kBenchHeader);

  const auto t = bench_layer(64, 4, 90.0, opt);
  EXPECT_GT(t.sparse_us_median, 0.0);
}

}  // namespace
}  // namespace pclt
