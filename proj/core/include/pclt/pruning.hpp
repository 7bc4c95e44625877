#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pclt/data.hpp"
#include "pclt/mask.hpp"
#include "pclt/model.hpp"
#include "pclt/optimizer.hpp"
#include "pclt/ticket.hpp"
#include "pclt/train.hpp"

namespace pclt {

enum class Scope { Global, Local };
enum class GroupFilter { All, ConvOnly, FcOnly };
enum class RewindTarget { InitialWeights };

std::string_view to_string(Scope s);
std::string_view to_string(GroupFilter f);
Scope scope_from_string(std::string_view s);
GroupFilter group_filter_from_string(std::string_view s);
bool in_filter(Group group, GroupFilter filter) noexcept;

/// Cut for one mask entry: every surviving weight with |θ| < alpha is pruned,
/// plus the first `tie_quota` survivors with |θ| == alpha in flat order.
struct LayerThreshold {
  std::size_t mask_entry = 0;
  std::string name;
  float alpha = 0.0f;
  std::size_t tie_quota = 0;
};

struct Thresholds {
  Scope scope = Scope::Global;
  GroupFilter filter = GroupFilter::All;
  /// Global cut; Local cuts live in `layers` only.
  float alpha = 0.0f;
  std::size_t tie_quota = 0;
  /// In-scope entries. For Global every layer carries the global alpha, and
  /// the tie quota is shared across layers in mask-entry order.
  std::vector<LayerThreshold> layers;
  /// Weights the cut removes; equals ⌈p·S⌉ (Global) or Σ⌈p·S_l⌉ (Local).
  std::size_t planned = 0;
  /// Identity of the (params, mask) pair the cut was computed on; empty for
  /// hand-built cuts, which are applied without a staleness check.
  std::optional<std::uint64_t> fingerprint;

  static constexpr std::size_t kAllTies = static_cast<std::size_t>(-1);

  /// Prune every in-filter weight with |θ| ≤ alpha.
  static Thresholds manual_global(const Mask& mask, const ParamStore& params, float alpha,
                                  GroupFilter filter = GroupFilter::All);
};

/// Count of weights a fraction p removes from S survivors: ⌈p·S⌉.
std::size_t prune_count(double p, std::size_t survivors);

/// Magnitude of the ⌈p·S⌉-th smallest surviving weight in scope (Global) or
/// per layer (Local). Throws NothingToPrune when p·S < 1, Scope when the filter
/// selects no surviving weight, DegeneratePrune when the cut would remove
/// every surviving weight in scope.
Thresholds magnitude_threshold(const ParamStore& params, const Mask& mask, double p, Scope scope,
                               GroupFilter filter = GroupFilter::All);

/// New mask with the cut applied; pruned entries stay pruned and the round
/// index advances. Throws Staleness when the fingerprint disagrees.
Mask apply_prune(const Mask& mask, const ParamStore& params, const Thresholds& thresholds);

/// θ ← m ⊙ θ for every masked entry. Idempotent.
void commit_masked_weights(ParamStore& params, const Mask& mask);

std::uint64_t prune_fingerprint(const ParamStore& params, const Mask& mask);

struct Checkpoint {
  ParamStore params;
  std::string rng_state;
  std::size_t cycle = 0;

  static Checkpoint capture(const ParamStore& params, const Rng& rng, std::size_t cycle);
};

/// Surviving weights ← θ⁽⁰⁾ bitwise, pruned weights ← 0, unmasked entries
/// (biases, affine scale/shift) ← θ⁽⁰⁾. Resets the optimizer if given.
/// Throws Provenance if origin does not match the store layout.
void rewind(ParamStore& params, const Checkpoint& origin, const Mask& mask, Optimizer* optimizer = nullptr);

struct LayerSparsity {
  std::string name;
  Group group = Group::Conv;
  std::size_t count = 0;
  std::size_t zeros = 0;
  double sparsity_pct = 0.0;
};

struct GroupSparsity {
  Group group = Group::Conv;
  std::size_t count = 0;
  std::size_t zeros = 0;
  double sparsity_pct = 0.0;
};

struct SparsityReport {
  std::vector<LayerSparsity> layers;
  /// Conv then FC.
  std::vector<GroupSparsity> groups;
  std::size_t total = 0;
  std::size_t zeros = 0;
  std::size_t surviving = 0;
  double global_pct = 0.0;

  const GroupSparsity& group(Group g) const { return groups[static_cast<std::size_t>(g)]; }
};

/// Percentages are rounded to two decimals; counts are exact.
SparsityReport sparsity_report(const Mask& mask, const ParamStore& params);
double round_pct(double fraction);

struct PruneConfig {
  Scope scope = Scope::Global;
  double per_round_fraction = 0.2;
  std::size_t rounds = 1;
  GroupFilter filter = GroupFilter::All;
  RewindTarget rewind_target = RewindTarget::InitialWeights;
  TrainCycle cycle{};

  void validate() const;
};

/// Smallest J with 1 − (1 − p)^J ≥ target.
std::size_t rounds_for_target(double per_round_fraction, double target_fraction);

struct RoundRecord {
  std::size_t round = 0;
  SparsityReport sparsity;
  double test_accuracy_pct = 0.0;
  double train_loss = 0.0;
  double wall_seconds = 0.0;
};

/// One model under the train → prune → rewind loop. Cycle c trains with the
/// stream derive_seed(seed, c), so copies of a session replay identically.
class PruningSession {
 public:
  PruningSession(ModelSpec spec, const data::Dataset& dataset, TrainCycle cycle, std::uint64_t seed);

  /// One cycle on F(x; m ⊙ θ). Divergence is rethrown naming the round.
  CycleStats train(const EpochHook& on_epoch = {});
  double test_accuracy() const;
  Thresholds threshold(double p, Scope scope, GroupFilter filter = GroupFilter::All) const;
  /// apply_prune followed by commit_masked_weights.
  void prune(const Thresholds& thresholds);
  void rewind();
  RoundRecord record(const CycleStats& stats, double wall_seconds) const;

  Model& model() noexcept { return model_; }
  const Model& model() const noexcept { return model_; }
  const Mask& mask() const noexcept { return mask_; }
  const Checkpoint& origin() const noexcept { return origin_; }
  const data::Dataset& dataset() const noexcept { return *dataset_; }
  const TrainCycle& cycle() const noexcept { return cycle_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t cycles_run() const noexcept { return cycles_; }

  /// Ticket of the current state with provenance filled in.
  Ticket ticket(std::string method) const;

 private:
  Model model_;
  Mask mask_;
  Checkpoint origin_;
  const data::Dataset* dataset_;
  TrainCycle cycle_;
  std::uint64_t seed_;
  std::size_t cycles_ = 0;
};

struct RunResult {
  Ticket ticket;
  /// Row 0 is the dense model, row j the retrained subnetwork of round j.
  std::vector<RoundRecord> trajectory;
  /// masks[j] is m⁽ʲ⁾.
  std::vector<Mask> masks;
  Checkpoint origin;
};

using RoundHook = std::function<void(const PruningSession& session, const RoundRecord& record)>;

/// J rounds of {threshold, apply_prune, commit, rewind, train} after a dense
/// training cycle.
RunResult imp_run(const ModelSpec& spec, const data::Dataset& dataset, const PruneConfig& config, std::uint64_t seed,
                  const RoundHook& on_round = {});

/// Continues IMP from an existing session (dense-trained or mid-trajectory).
void imp_continue(PruningSession& session, const PruneConfig& config, RunResult& result, const RoundHook& on_round = {});

/// Trains once, prunes p_total in one step, rewinds and retrains.
RunResult one_shot_run(const ModelSpec& spec, const data::Dataset& dataset, double p_total, const TrainCycle& cycle,
                       std::uint64_t seed, Scope scope = Scope::Global, GroupFilter filter = GroupFilter::All);

/// One-shot from a session that has finished its dense cycle. The session is
/// copied; the argument is left untouched.
RunResult one_shot_from(const PruningSession& dense, double p_total, Scope scope = Scope::Global,
                        GroupFilter filter = GroupFilter::All);

inline constexpr std::string_view kTrajectoryHeader =
    "round,global_sparsity_pct,conv_sparsity_pct,fc_sparsity_pct,test_accuracy_pct,train_loss";

void write_trajectory_csv(std::ostream& out, const std::vector<RoundRecord>& trajectory);

}  // namespace pclt
