#include <cmath>
#include <cstring>
#include <sstream>

#include "oracles.hpp"
#include "pclt/pruning.hpp"
#include "support.hpp"

namespace pclt {
namespace {

ParamStore two_layers(std::vector<float> a, std::vector<float> b) {
  ParamStore s;
  const auto na = a.size(), nb = b.size();
  s.add("a.weight", Tensor({1, na}, std::move(a)), Group::Conv, true);
  s.add("a.bias", Tensor({1}), Group::Conv, false);
  s.add("b.weight", Tensor({1, nb}, std::move(b)), Group::FC, true);
  return s;
}

std::vector<bool> bits(const BitVector& b) {
  std::vector<bool> out;
  for (std::size_t i = 0; i < b.size(); ++i) out.push_back(b.test(i));
  return out;
}

TEST(PruneCount, Ceil) {
  EXPECT_EQ(prune_count(0.4, 5), 2u);
  EXPECT_EQ(prune_count(0.2, 10), 2u);
  EXPECT_EQ(prune_count(0.2, 11), 3u);
  EXPECT_EQ(prune_count(0.3, 10), 3u);  // 0.3·10 is 3.0000000000000004 in binary
  EXPECT_EQ(prune_count(0.99, 50560), 50055u);
}

TEST(InitMask, AllOnesOverPrunableOnly) {
  auto s = two_layers({1, 2, 3}, {4, 5});
  const Mask m = Mask::ones(s);
  ASSERT_EQ(m.entries().size(), 2u);
  EXPECT_EQ(m.entries()[0].name, "a.weight");
  EXPECT_EQ(m.entries()[1].name, "b.weight");
  EXPECT_EQ(m.find("a.bias"), nullptr);
  EXPECT_EQ(m.round_index(), 0u);
  EXPECT_EQ(sparsity_report(m, s).global_pct, 0.0);
}

TEST(MagnitudeThreshold, GlobalExample) {
  auto s = two_layers({0.05f, 0.1f, 0.2f}, {0.9f, 0.4f});
  const Mask m = Mask::ones(s);
  auto t = magnitude_threshold(s, m, 0.4, Scope::Global);
  EXPECT_FLOAT_EQ(t.alpha, 0.1f);
  EXPECT_EQ(t.planned, 2u);
  const Mask next = apply_prune(m, s, t);
  EXPECT_EQ(bits(next.entries()[0].keep), (std::vector<bool>{false, false, true}));
  EXPECT_EQ(bits(next.entries()[1].keep), (std::vector<bool>{true, true}));
  EXPECT_EQ(next.round_index(), 1u);
}

TEST(MagnitudeThreshold, LocalExample) {
  auto s = two_layers({0.05f, 0.1f, 0.2f}, {0.9f, 0.4f});
  const Mask m = Mask::ones(s);
  auto t = magnitude_threshold(s, m, 0.4, Scope::Local);
  ASSERT_EQ(t.layers.size(), 2u);
  EXPECT_FLOAT_EQ(t.layers[0].alpha, 0.1f);
  EXPECT_FLOAT_EQ(t.layers[1].alpha, 0.4f);
  EXPECT_EQ(t.planned, 3u);
  const Mask next = apply_prune(m, s, t);
  EXPECT_EQ(bits(next.entries()[1].keep), (std::vector<bool>{true, false}));
}

TEST(MagnitudeThreshold, Guards) {
  auto s = two_layers({0.05f, 0.1f, 0.2f}, {0.9f, 0.4f});
  const Mask m = Mask::ones(s);
  EXPECT_PCLT_ERROR(ErrorKind::NothingToPrune, magnitude_threshold(s, m, 0.1, Scope::Global));
  EXPECT_PCLT_ERROR(ErrorKind::DegeneratePrune, magnitude_threshold(s, m, 0.9, Scope::Global));
  ParamStore conv_only;
  conv_only.add("w", Tensor::vector({1, 2}), Group::Conv, true);
  EXPECT_PCLT_ERROR(ErrorKind::Scope,
                    magnitude_threshold(conv_only, Mask::ones(conv_only), 0.5, Scope::Global, GroupFilter::FcOnly));
}

TEST(ApplyPrune, InclusiveBoundary) {
  ParamStore s;
  s.add("w", Tensor::vector({0.3f, -0.1f, 0.0f}), Group::FC, true);
  const Mask m = Mask::ones(s);
  const Mask a = apply_prune(m, s, Thresholds::manual_global(m, s, 0.1f));
  EXPECT_EQ(bits(a.entries()[0].keep), (std::vector<bool>{true, false, false}));
  const Mask z = apply_prune(m, s, Thresholds::manual_global(m, s, 0.0f));
  EXPECT_EQ(bits(z.entries()[0].keep), (std::vector<bool>{true, true, false}));
}

TEST(ApplyPrune, PrunedEntriesStayPruned) {
  ParamStore s;
  s.add("w", Tensor::vector({5, 6, 7, 8}), Group::FC, true);
  Mask m = Mask::ones(s);
  m.entries()[0].keep.reset(3);
  s[0].tensor[3] = 100.0f;
  const Mask next = apply_prune(m, s, magnitude_threshold(s, m, 0.34, Scope::Global));
  EXPECT_FALSE(next.entries()[0].keep.test(3));
  EXPECT_FALSE(next.entries()[0].keep.test(0));
  EXPECT_TRUE(next.subset_of(m));
}

TEST(ApplyPrune, StaleThresholdRejected) {
  auto s = two_layers({0.05f, 0.1f, 0.2f}, {0.9f, 0.4f});
  const Mask m = Mask::ones(s);
  auto t = magnitude_threshold(s, m, 0.4, Scope::Global);
  s[0].tensor[2] = 0.0f;
  EXPECT_PCLT_ERROR(ErrorKind::Staleness, apply_prune(m, s, t));
}

TEST(ApplyPrune, TiesPruneLowerFlatIndexFirst) {
  ParamStore s;
  s.add("a", Tensor::vector({0.5f, 0.5f}), Group::Conv, true);
  s.add("b", Tensor::vector({0.5f, 0.5f, 0.9f}), Group::FC, true);
  const Mask m = Mask::ones(s);
  const Mask next = apply_prune(m, s, magnitude_threshold(s, m, 0.6, Scope::Global));
  EXPECT_EQ(bits(next.entries()[0].keep), (std::vector<bool>{false, false}));
  EXPECT_EQ(bits(next.entries()[1].keep), (std::vector<bool>{false, true, true}));
}

TEST(ApplyPrune, MatchesSortOracleOnRandomFixtures) {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    auto s = test::weight_store({{1 + rng.below(20), 1 + rng.below(20)}, {1 + rng.below(30), 3}, {4, 4}}, rng, 2);
    if (trial % 3 == 0) s[0].tensor[0] = s[2].tensor[0];  // cross-layer tie
    Mask m = Mask::ones(s);
    const double p = rng.uniform(0.15, 0.7);
    for (auto scope : {Scope::Global, Scope::Local}) {
      Mask next;
      try {
        next = apply_prune(m, s, magnitude_threshold(s, m, p, scope));
      } catch (const Error&) {
        continue;
      }
      const auto expected = oracle::sorted_prune(s, m, p, scope);
      for (std::size_t e = 0; e < expected.size(); ++e) EXPECT_EQ(next.entries()[e].keep, expected[e]);
    }
  }
}

TEST(GlobalVsLocal, SmallLayerIsCrushedOnlyByGlobal) {
  Rng rng(3);
  ParamStore s;
  Tensor big({40}), small({40});
  for (auto& v : big.data()) v = static_cast<float>(rng.uniform(1.0, 2.0));
  for (auto& v : small.data()) v = static_cast<float>(rng.uniform(0.0, 0.1));
  s.add("big", big, Group::Conv, true);
  s.add("small", small, Group::FC, true);
  const Mask m = Mask::ones(s);
  const auto g = sparsity_report(apply_prune(m, s, magnitude_threshold(s, m, 0.5, Scope::Global)), s);
  const auto l = sparsity_report(apply_prune(m, s, magnitude_threshold(s, m, 0.5, Scope::Local)), s);
  EXPECT_EQ(g.layers[1].sparsity_pct, 100.0);
  EXPECT_EQ(g.layers[0].sparsity_pct, 0.0);
  EXPECT_EQ(l.layers[0].sparsity_pct, 50.0);
  EXPECT_EQ(l.layers[1].sparsity_pct, 50.0);
}

TEST(CommitMaskedWeights, IdempotentAndCounts) {
  Rng rng(8);
  auto s = test::weight_store({{6, 7}}, rng);
  const auto before = s;
  commit_masked_weights(s, Mask::ones(s));
  EXPECT_TRUE(s.bit_equal(before));
  const Mask m = apply_prune(Mask::ones(s), s, magnitude_threshold(s, Mask::ones(s), 0.5, Scope::Global));
  commit_masked_weights(s, m);
  const auto once = s;
  commit_masked_weights(s, m);
  EXPECT_TRUE(s.bit_equal(once));
  std::size_t zeros = 0;
  for (float v : s[0].tensor.data()) zeros += v == 0.0f;
  EXPECT_GE(zeros, m.total() - m.kept());
}

TEST(Rewind, RestoresSurvivorsAndZeroesPruned) {
  Rng rng(9);
  auto s = test::weight_store({{5, 5}, {5, 2}}, rng);
  const auto origin = Checkpoint::capture(s, rng, 0);
  for (auto& e : s) {
    for (auto& v : e.tensor.data()) v += 1.0f;
  }
  rewind(s, origin, Mask::ones(s));
  EXPECT_TRUE(s.bit_equal(origin.params));

  Mask none = Mask::ones(s);
  for (auto& e : none.entries()) e.keep = BitVector(e.keep.size(), false);
  rewind(s, origin, none);
  for (const auto& e : s) {
    if (!e.prunable) continue;
    for (float v : e.tensor.data()) EXPECT_EQ(v, 0.0f);
  }

  const Mask mixed = apply_prune(Mask::ones(s), origin.params,
                                 magnitude_threshold(origin.params, Mask::ones(s), 0.3, Scope::Global));
  rewind(s, origin, mixed);
  for (const auto& me : mixed.entries()) {
    const auto now = s[me.param_index].tensor.data();
    const auto init = origin.params[me.param_index].tensor.data();
    for (std::size_t i = 0; i < now.size(); ++i) {
      if (me.keep.test(i)) {
        EXPECT_EQ(std::memcmp(&now[i], &init[i], sizeof(float)), 0);
      } else {
        EXPECT_EQ(now[i], 0.0f);
      }
    }
  }
}

TEST(Rewind, ResetsOptimizerAndChecksLayout) {
  Rng rng(10);
  auto s = test::weight_store({{3, 3}}, rng);
  const auto origin = Checkpoint::capture(s, rng, 0);
  Optimizer opt(OptimizerKind::Adam, 1e-3f);
  for (auto& e : s) e.tensor.ensure_grad()[0] = 1.0f;
  opt.step(s);
  rewind(s, origin, Mask::ones(s), &opt);
  EXPECT_FALSE(opt.has_moments());
  auto other = test::weight_store({{3, 4}}, rng);
  EXPECT_PCLT_ERROR(ErrorKind::Provenance, rewind(other, origin, Mask::ones(other)));
}

TEST(SparsityReport, GroupsAndTotals) {
  Rng rng(11);
  auto s = test::weight_store({{10, 10}, {10, 5}, {5, 2}}, rng, 1);
  const Mask m = apply_prune(Mask::ones(s), s, magnitude_threshold(s, Mask::ones(s), 0.37, Scope::Local));
  const auto r = sparsity_report(m, s);
  std::size_t zeros = 0;
  for (const auto& l : r.layers) zeros += l.zeros;
  EXPECT_EQ(zeros, r.zeros);
  EXPECT_EQ(r.total, 160u);
  EXPECT_EQ(r.surviving, r.total - r.zeros);
  EXPECT_EQ(r.group(Group::Conv).count, 100u);
  EXPECT_EQ(r.group(Group::FC).count, 60u);
  EXPECT_EQ(r.global_pct, round_pct(static_cast<double>(r.zeros) / 160.0));
}

TEST(SparsityReport, FilteredPruneGlobalArithmetic) {
  Rng rng(12);
  // Conv fraction 121/1000 mirrors the reference ablation arithmetic.
  ParamStore s;
  s.add("conv", test::random_tensor({121}, rng), Group::Conv, true);
  s.add("fc", test::random_tensor({879}, rng), Group::FC, true);
  const Mask m = Mask::ones(s);
  const auto conv = sparsity_report(apply_prune(m, s, magnitude_threshold(s, m, 0.99, Scope::Global, GroupFilter::ConvOnly)), s);
  const auto fc = sparsity_report(apply_prune(m, s, magnitude_threshold(s, m, 0.99, Scope::Global, GroupFilter::FcOnly)), s);
  EXPECT_EQ(conv.zeros, 120u);
  EXPECT_NEAR(conv.global_pct, 12.0, 0.1);
  EXPECT_EQ(fc.zeros, 871u);
  EXPECT_NEAR(fc.global_pct, 87.1, 0.1);
}

TEST(RoundsForTarget, ClosedForm) {
  EXPECT_EQ(rounds_for_target(0.2, 0.2), 1u);
  EXPECT_EQ(rounds_for_target(0.2, 0.6), 5u);
  EXPECT_EQ(rounds_for_target(0.2, 0.89), 10u);
  EXPECT_EQ(rounds_for_target(0.2, 0.99), 21u);
  for (double t : {0.1, 0.3, 0.4, 0.9, 0.95}) {
    const auto j = rounds_for_target(0.2, t);
    EXPECT_GE(1.0 - std::pow(0.8, static_cast<double>(j)), t - 1e-12);
    EXPECT_LT(1.0 - std::pow(0.8, static_cast<double>(j - 1)), t);
  }
}

TEST(Compounding, RepeatedRoundsTrackClosedForm) {
  Rng rng(21);
  auto s = test::weight_store({{100, 60}, {60, 40}}, rng, 1);
  Mask m = Mask::ones(s);
  for (int j = 1; j <= 10; ++j) {
    m = apply_prune(m, s, magnitude_threshold(s, m, 0.2, Scope::Global));
    commit_masked_weights(s, m);
    const double expected = 100.0 * (1.0 - std::pow(0.8, j));
    EXPECT_NEAR(sparsity_report(m, s).global_pct, expected, 0.5) << "round " << j;
  }
}

TEST(PruneConfig, Validation) {
  PruneConfig c;
  c.per_round_fraction = 1.0;
  EXPECT_PCLT_ERROR(ErrorKind::Config, c.validate());
  c.per_round_fraction = 0.2;
  c.rounds = 0;
  EXPECT_PCLT_ERROR(ErrorKind::Config, c.validate());
}

TEST(Trajectory, CsvHeader) {
  std::ostringstream out;
  write_trajectory_csv(out, {});
  EXPECT_EQ(out.str(), "round,global_sparsity_pct,conv_sparsity_pct,fc_sparsity_pct,test_accuracy_pct,train_loss\n");
}

TEST(Enums, StringRoundTrip) {
  for (auto s : {Scope::Global, Scope::Local}) EXPECT_EQ(scope_from_string(to_string(s)), s);
  for (auto f : {GroupFilter::All, GroupFilter::ConvOnly, GroupFilter::FcOnly}) {
    EXPECT_EQ(group_filter_from_string(to_string(f)), f);
  }
}

}  // namespace
}  // namespace pclt
