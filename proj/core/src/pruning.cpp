#include "pclt/pruning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "pclt/error.hpp"

namespace pclt {

std::string_view to_string(Scope s) { return s == Scope::Global ? "global" : "local"; }

std::string_view to_string(GroupFilter f) {
  switch (f) {
    case GroupFilter::All: return "all";
    case GroupFilter::ConvOnly: return "conv";
    case GroupFilter::FcOnly: return "fc";
  }
  return "all";
}

Scope scope_from_string(std::string_view s) {
  if (s == "global") return Scope::Global;
  if (s == "local") return Scope::Local;
  throw Error(ErrorKind::Config, "unknown pruning scope '" + std::string(s) + "'");
}

GroupFilter group_filter_from_string(std::string_view s) {
  if (s == "all" || s == "both") return GroupFilter::All;
  if (s == "conv") return GroupFilter::ConvOnly;
  if (s == "fc") return GroupFilter::FcOnly;
  throw Error(ErrorKind::Config, "unknown group filter '" + std::string(s) + "'");
}

bool in_filter(Group group, GroupFilter filter) noexcept {
  switch (filter) {
    case GroupFilter::All: return true;
    case GroupFilter::ConvOnly: return group == Group::Conv;
    case GroupFilter::FcOnly: return group == Group::FC;
  }
  return false;
}

std::size_t prune_count(double p, std::size_t survivors) {
  const double exact = p * static_cast<double>(survivors);
  return static_cast<std::size_t>(std::ceil(exact - 1e-9));
}

std::uint64_t prune_fingerprint(const ParamStore& params, const Mask& mask) {
  return derive_seed(params.content_hash(), mask.hash(), mask.round_index());
}

Thresholds Thresholds::manual_global(const Mask& mask, const ParamStore& params, float alpha, GroupFilter filter) {
  mask.check_aligned(params);
  Thresholds t;
  t.scope = Scope::Global;
  t.filter = filter;
  t.alpha = alpha;
  t.tie_quota = kAllTies;
  for (std::size_t e = 0; e < mask.entries().size(); ++e) {
    const auto& entry = mask.entries()[e];
    if (!in_filter(params[entry.param_index].group, filter)) continue;
    t.layers.push_back(LayerThreshold{e, entry.name, alpha, kAllTies});
  }
  return t;
}

namespace {

// Surviving magnitudes of one mask entry, in flat order.
std::vector<float> surviving_magnitudes(const ParamStore& params, const Mask::Entry& entry) {
  const auto w = params[entry.param_index].tensor.data();
  std::vector<float> out;
  out.reserve(entry.keep.count());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (entry.keep.test(i)) out.push_back(std::fabs(w[i]));
  }
  return out;
}

// k-th smallest value (1-based) and how many copies of it lie within the k smallest.
std::pair<float, std::size_t> kth_smallest(std::vector<float> values, std::size_t k) {
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end());
  const float alpha = values[k - 1];
  std::size_t below = 0;
  for (std::size_t i = 0; i < k - 1; ++i) below += values[i] < alpha ? 1 : 0;
  return {alpha, k - below};
}

}  // namespace

Thresholds magnitude_threshold(const ParamStore& params, const Mask& mask, double p, Scope scope, GroupFilter filter) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::Parameter, "prune fraction must lie in (0, 1), got " + std::to_string(p));
  mask.check_aligned(params);

  Thresholds t;
  t.scope = scope;
  t.filter = filter;
  std::vector<std::vector<float>> per_layer;
  std::size_t survivors = 0;
  for (std::size_t e = 0; e < mask.entries().size(); ++e) {
    const auto& entry = mask.entries()[e];
    if (!in_filter(params[entry.param_index].group, filter)) continue;
    t.layers.push_back(LayerThreshold{e, entry.name, 0.0f, 0});
    per_layer.push_back(surviving_magnitudes(params, entry));
    survivors += per_layer.back().size();
  }
  if (survivors == 0) {
    throw Error(ErrorKind::Scope, "no surviving weights in scope '" + std::string(to_string(filter)) + "'");
  }
  if (p * static_cast<double>(survivors) < 1.0 - 1e-9) {
    throw Error(ErrorKind::NothingToPrune, "p = " + std::to_string(p) + " of " + std::to_string(survivors) +
                                               " surviving weights is below one weight");
  }

  if (scope == Scope::Global) {
    const std::size_t k = prune_count(p, survivors);
    if (k >= survivors) {
      throw Error(ErrorKind::DegeneratePrune, "pruning " + std::to_string(k) + " of " + std::to_string(survivors) +
                                                  " surviving weights would empty the scope");
    }
    std::vector<float> all;
    all.reserve(survivors);
    for (const auto& v : per_layer) all.insert(all.end(), v.begin(), v.end());
    const auto [alpha, ties] = kth_smallest(std::move(all), k);
    t.alpha = alpha;
    t.tie_quota = ties;
    t.planned = k;
    for (auto& l : t.layers) {
      l.alpha = alpha;
      l.tie_quota = ties;
    }
  } else {
    for (std::size_t l = 0; l < t.layers.size(); ++l) {
      const std::size_t s = per_layer[l].size();
      const std::size_t k = s == 0 ? 0 : prune_count(p, s);
      if (k == 0) {
        t.layers[l].alpha = -1.0f;
        continue;
      }
      const auto [alpha, ties] = kth_smallest(std::move(per_layer[l]), k);
      t.layers[l].alpha = alpha;
      t.layers[l].tie_quota = ties;
      t.planned += k;
    }
    if (t.planned >= survivors) {
      throw Error(ErrorKind::DegeneratePrune, "local cut removes every surviving weight in scope");
    }
  }
  t.fingerprint = prune_fingerprint(params, mask);
  return t;
}

Mask apply_prune(const Mask& mask, const ParamStore& params, const Thresholds& thresholds) {
  mask.check_aligned(params);
  if (thresholds.fingerprint && *thresholds.fingerprint != prune_fingerprint(params, mask)) {
    throw Error(ErrorKind::Staleness, "thresholds were computed on different weights or a different mask");
  }
  Mask out = mask;
  // Global ties share one quota walked in mask-entry order.
  std::size_t shared_quota = thresholds.tie_quota;
  for (const auto& lt : thresholds.layers) {
    if (lt.mask_entry >= out.entries().size() || out.entries()[lt.mask_entry].name != lt.name) {
      throw Error(ErrorKind::Staleness, "threshold layer '" + lt.name + "' does not match the mask");
    }
    if (lt.alpha < 0.0f) continue;
    auto& entry = out.entries()[lt.mask_entry];
    const auto w = params[entry.param_index].tensor.data();
    std::size_t local_quota = lt.tie_quota;
    std::size_t& quota = thresholds.scope == Scope::Global ? shared_quota : local_quota;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!entry.keep.test(i)) continue;
      const float mag = std::fabs(w[i]);
      if (mag < lt.alpha) {
        entry.keep.reset(i);
      } else if (mag == lt.alpha && quota > 0) {
        entry.keep.reset(i);
        if (quota != Thresholds::kAllTies) --quota;
      }
    }
  }
  out.set_round_index(mask.round_index() + 1);
  return out;
}

void commit_masked_weights(ParamStore& params, const Mask& mask) {
  mask.check_aligned(params);
  for (const auto& entry : mask.entries()) {
    auto w = params[entry.param_index].tensor.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!entry.keep.test(i)) w[i] = 0.0f;
    }
  }
}

Checkpoint Checkpoint::capture(const ParamStore& params, const Rng& rng, std::size_t cycle) {
  Checkpoint c{params, rng.state(), cycle};
  for (auto& e : c.params) e.tensor.drop_grad();
  return c;
}

void rewind(ParamStore& params, const Checkpoint& origin, const Mask& mask, Optimizer* optimizer) {
  if (origin.params.size() != params.size()) {
    throw Error(ErrorKind::Provenance, "checkpoint holds " + std::to_string(origin.params.size()) + " entries, model " +
                                           std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (origin.params[i].name != params[i].name || origin.params[i].tensor.shape() != params[i].tensor.shape()) {
      throw Error(ErrorKind::Provenance, "checkpoint entry '" + origin.params[i].name + "' " +
                                             shape_string(origin.params[i].tensor.shape()) + " does not match '" +
                                             params[i].name + "' " + shape_string(params[i].tensor.shape()));
    }
  }
  mask.check_aligned(params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].tensor.data();
    const auto src = origin.params[i].tensor.data();
    std::copy(src.begin(), src.end(), dst.begin());
    if (const BitVector* keep = mask.for_param(i)) {
      for (std::size_t j = 0; j < dst.size(); ++j) {
        if (!keep->test(j)) dst[j] = 0.0f;
      }
    }
  }
  if (optimizer) optimizer->reset();
}

double round_pct(double fraction) { return std::round(fraction * 10000.0) / 100.0; }

namespace {

double pct(std::size_t zeros, std::size_t count) {
  return count == 0 ? 0.0 : round_pct(static_cast<double>(zeros) / static_cast<double>(count));
}

}  // namespace

SparsityReport sparsity_report(const Mask& mask, const ParamStore& params) {
  mask.check_aligned(params);
  SparsityReport r;
  r.groups = {GroupSparsity{Group::Conv}, GroupSparsity{Group::FC}};
  for (const auto& entry : mask.entries()) {
    LayerSparsity l;
    l.name = entry.name;
    l.group = params[entry.param_index].group;
    l.count = entry.keep.size();
    l.zeros = l.count - entry.keep.count();
    l.sparsity_pct = pct(l.zeros, l.count);
    auto& g = r.groups[static_cast<std::size_t>(l.group)];
    g.count += l.count;
    g.zeros += l.zeros;
    r.total += l.count;
    r.zeros += l.zeros;
    r.layers.push_back(std::move(l));
  }
  for (auto& g : r.groups) g.sparsity_pct = pct(g.zeros, g.count);
  r.surviving = r.total - r.zeros;
  r.global_pct = pct(r.zeros, r.total);
  return r;
}

void PruneConfig::validate() const {
  if (!(per_round_fraction > 0.0 && per_round_fraction < 1.0)) {
    throw Error(ErrorKind::Config, "per_round_fraction must lie in (0, 1)");
  }
  if (rounds == 0) throw Error(ErrorKind::Config, "rounds must be at least 1");
}

std::size_t rounds_for_target(double per_round_fraction, double target_fraction) {
  if (!(per_round_fraction > 0.0 && per_round_fraction < 1.0) || !(target_fraction > 0.0 && target_fraction < 1.0)) {
    throw Error(ErrorKind::Parameter, "fractions must lie in (0, 1)");
  }
  std::size_t j = 1;
  double kept = 1.0 - per_round_fraction;
  while (1.0 - kept < target_fraction - 1e-12) {
    kept *= 1.0 - per_round_fraction;
    ++j;
  }
  return j;
}

PruningSession::PruningSession(ModelSpec spec, const data::Dataset& dataset, TrainCycle cycle, std::uint64_t seed)
    : model_(std::move(spec)), dataset_(&dataset), cycle_(std::move(cycle)), seed_(seed) {
  if (model_.spec().num_classes != dataset.num_classes()) {
    throw Error(ErrorKind::SpecMismatch, "model has " + std::to_string(model_.spec().num_classes) +
                                             " classes, dataset " + std::to_string(dataset.num_classes()));
  }
  mask_ = Mask::ones(model_.params());
  origin_ = Checkpoint::capture(model_.params(), Rng(derive_seed(seed_, 0)), 0);
}

CycleStats PruningSession::train(const EpochHook& on_epoch) {
  Rng rng(derive_seed(seed_, cycles_));
  try {
    const auto stats = train_cycle(model_, &mask_, *dataset_, cycle_, rng, on_epoch);
    ++cycles_;
    return stats;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Divergence) throw;
    throw Error(ErrorKind::Divergence, "round " + std::to_string(mask_.round_index()) + ": " + e.what());
  }
}

double PruningSession::test_accuracy() const { return evaluate(model_, &mask_, dataset_->test()); }

Thresholds PruningSession::threshold(double p, Scope scope, GroupFilter filter) const {
  return magnitude_threshold(model_.params(), mask_, p, scope, filter);
}

void PruningSession::prune(const Thresholds& thresholds) {
  mask_ = apply_prune(mask_, model_.params(), thresholds);
  commit_masked_weights(model_.params(), mask_);
}

void PruningSession::rewind() { pclt::rewind(model_.params(), origin_, mask_); }

RoundRecord PruningSession::record(const CycleStats& stats, double wall_seconds) const {
  RoundRecord r;
  r.round = mask_.round_index();
  r.sparsity = sparsity_report(mask_, model_.params());
  r.test_accuracy_pct = test_accuracy();
  r.train_loss = stats.final_epoch_loss;
  r.wall_seconds = wall_seconds;
  return r;
}

Ticket PruningSession::ticket(std::string method) const {
  Ticket t;
  t.spec = model_.spec();
  t.initial = origin_.params;
  t.trained = model_.params();
  for (auto& e : t.trained) e.tensor.drop_grad();
  t.mask = mask_;
  t.provenance["method"] = std::move(method);
  t.provenance["dataset_checksum"] = std::to_string(dataset_->checksum());
  t.provenance["dataset_classes"] = std::to_string(dataset_->num_classes());
  t.provenance["seed"] = std::to_string(seed_);
  t.provenance["init_seed"] = std::to_string(model_.spec().init_seed);
  t.provenance["cycles"] = std::to_string(cycles_);
  t.provenance["epochs_per_cycle"] = std::to_string(cycle_.epochs);
  t.provenance["batch_size"] = std::to_string(cycle_.batch_size);
  t.provenance["optimizer"] = std::string(to_string(cycle_.optimizer));
  t.provenance["learning_rate"] = std::to_string(cycle_.learning_rate);
  t.provenance["library_version"] = PCLT_VERSION;
  return t;
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

void imp_continue(PruningSession& session, const PruneConfig& config, RunResult& result, const RoundHook& on_round) {
  config.validate();
  while (session.mask().round_index() < config.rounds) {
    const auto t0 = Clock::now();
    session.prune(session.threshold(config.per_round_fraction, config.scope, config.filter));
    session.rewind();
    const auto stats = session.train();
    result.trajectory.push_back(session.record(stats, since(t0)));
    result.masks.push_back(session.mask());
    if (on_round) on_round(session, result.trajectory.back());
  }
  result.ticket = session.ticket(std::string("imp-") + std::string(to_string(config.scope)));
  result.origin = session.origin();
}

RunResult imp_run(const ModelSpec& spec, const data::Dataset& dataset, const PruneConfig& config, std::uint64_t seed,
                  const RoundHook& on_round) {
  config.validate();
  PruningSession session(spec, dataset, config.cycle, seed);
  RunResult result;
  const auto t0 = Clock::now();
  const auto stats = session.train();
  result.trajectory.push_back(session.record(stats, since(t0)));
  result.masks.push_back(session.mask());
  if (on_round) on_round(session, result.trajectory.back());
  imp_continue(session, config, result, on_round);
  return result;
}

RunResult one_shot_from(const PruningSession& dense, double p_total, Scope scope, GroupFilter filter) {
  if (dense.cycles_run() == 0 || dense.mask().round_index() != 0) {
    throw Error(ErrorKind::Parameter, "one-shot pruning needs a session after exactly its dense cycle");
  }
  PruningSession session = dense;
  RunResult result;
  result.masks.push_back(session.mask());
  const auto t0 = Clock::now();
  session.prune(session.threshold(p_total, scope, filter));
  session.rewind();
  const auto stats = session.train();
  result.trajectory.push_back(session.record(stats, since(t0)));
  result.masks.push_back(session.mask());
  result.ticket = session.ticket(std::string("oneshot-") + std::string(to_string(scope)));
  result.origin = session.origin();
  return result;
}

RunResult one_shot_run(const ModelSpec& spec, const data::Dataset& dataset, double p_total, const TrainCycle& cycle,
                       std::uint64_t seed, Scope scope, GroupFilter filter) {
  if (!(p_total > 0.0 && p_total < 1.0)) throw Error(ErrorKind::Parameter, "p_total must lie in (0, 1)");
  PruningSession session(spec, dataset, cycle, seed);
  const auto t0 = Clock::now();
  const auto stats = session.train();
  auto dense_row = session.record(stats, since(t0));
  RunResult result = one_shot_from(session, p_total, scope, filter);
  result.trajectory.insert(result.trajectory.begin(), std::move(dense_row));
  return result;
}

void write_trajectory_csv(std::ostream& out, const std::vector<RoundRecord>& trajectory) {
  out << kTrajectoryHeader << '\n';
  for (const auto& r : trajectory) {
    out << r.round << ',' << r.sparsity.global_pct << ',' << r.sparsity.group(Group::Conv).sparsity_pct << ','
        << r.sparsity.group(Group::FC).sparsity_pct << ',' << r.test_accuracy_pct << ',' << r.train_loss << '\n';
  }
}

}  // namespace pclt
