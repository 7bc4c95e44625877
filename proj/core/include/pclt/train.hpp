#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "pclt/data.hpp"
#include "pclt/mask.hpp"
#include "pclt/model.hpp"
#include "pclt/optimizer.hpp"

namespace pclt {

enum class LrSchedule { Constant, Cosine };

std::string_view to_string(LrSchedule s);
LrSchedule lr_schedule_from_string(std::string_view s);

/// Budget for one training cycle. Each cycle starts from a fresh optimizer.
struct TrainCycle {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  OptimizerKind optimizer = OptimizerKind::Adam;
  float learning_rate = 3e-3f;
  /// Cosine anneals per epoch from learning_rate towards zero.
  LrSchedule schedule = LrSchedule::Cosine;
  data::AugmentConfig augment = data::AugmentConfig::upright();

  bool operator==(const TrainCycle&) const = default;
};

struct CycleStats {
  double final_epoch_loss = 0.0;  ///< mean training loss of the last epoch
  std::size_t steps = 0;
};

using EpochHook = std::function<void(std::size_t epoch, const Model& model)>;

/// Trains F(x; m ⊙ θ) for one cycle. Batches are reshuffled every epoch and
/// augmented on draw using `rng`. A non-finite loss aborts with Divergence.
CycleStats train_cycle(Model& model, const Mask* mask, const data::Dataset& dataset, const TrainCycle& cycle, Rng& rng,
                       const EpochHook& on_epoch = {});

/// Top-1 accuracy in percent.
double evaluate(const Model& model, const Mask* mask, const std::vector<data::PointCloudSample>& samples,
                std::size_t batch_size = 64);

/// Predicted labels, lowest index on ties.
std::vector<int> predict(const Model& model, const Mask* mask, const std::vector<data::PointCloudSample>& samples,
                         std::size_t batch_size = 64);

/// Share of samples (0..1) whose predicted label survives a random rotation
/// drawn with the rotation settings of `cfg`.
double rotation_agreement(const Model& model, const Mask* mask, const std::vector<data::PointCloudSample>& samples,
                          Rng& rng, const data::AugmentConfig& cfg = {});

}  // namespace pclt
