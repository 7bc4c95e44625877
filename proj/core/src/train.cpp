#include "pclt/train.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "pclt/error.hpp"

namespace pclt {

std::string_view to_string(LrSchedule s) { return s == LrSchedule::Constant ? "constant" : "cosine"; }

LrSchedule lr_schedule_from_string(std::string_view s) {
  if (s == "constant") return LrSchedule::Constant;
  if (s == "cosine") return LrSchedule::Cosine;
  throw Error(ErrorKind::Config, "unknown learning-rate schedule '" + std::string(s) + "'");
}

CycleStats train_cycle(Model& model, const Mask* mask, const data::Dataset& dataset, const TrainCycle& cycle, Rng& rng,
                       const EpochHook& on_epoch) {
  if (cycle.batch_size == 0) throw Error(ErrorKind::Config, "batch_size must be positive");
  const auto& train = dataset.train();
  if (train.empty()) throw Error(ErrorKind::EmptyInput, "empty training split");
  Optimizer opt(cycle.optimizer, cycle.learning_rate);
  model.params().zero_grad();

  CycleStats stats;
  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 0; epoch < cycle.epochs; ++epoch) {
    if (cycle.schedule == LrSchedule::Cosine) {
      const double t = static_cast<double>(epoch) / static_cast<double>(cycle.epochs);
      opt.set_learning_rate(static_cast<float>(0.5 * cycle.learning_rate * (1.0 + std::cos(std::numbers::pi * t))));
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cycle.batch_size) {
      const std::size_t end = std::min(order.size(), start + cycle.batch_size);
      std::vector<data::PointCloudSample> drawn;
      drawn.reserve(end - start);
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        drawn.push_back(data::augment(train[order[i]], rng, cycle.augment));
        labels.push_back(drawn.back().label);
      }
      std::vector<const data::PointCloudSample*> ptrs;
      for (const auto& d : drawn) ptrs.push_back(&d);

      Graph graph;
      Var logits = model.forward(graph, mask, data::stack_points(ptrs));
      Var loss = cross_entropy_loss(logits, labels);
      const float value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw Error(ErrorKind::Divergence, "non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                                               std::to_string(stats.steps));
      }
      graph.backward(loss);
      opt.step(model.params());
      loss_sum += value;
      ++batches;
      ++stats.steps;
    }
    stats.final_epoch_loss = loss_sum / static_cast<double>(batches);
    if (on_epoch) on_epoch(epoch, model);
  }
  return stats;
}

std::vector<int> predict(const Model& model, const Mask* mask, const std::vector<data::PointCloudSample>& samples,
                         std::size_t batch_size) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    std::vector<const data::PointCloudSample*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&samples[i]);
    const auto labels = argmax_rows(model.classify(mask, data::stack_points(ptrs)));
    out.insert(out.end(), labels.begin(), labels.end());
  }
  return out;
}

double evaluate(const Model& model, const Mask* mask, const std::vector<data::PointCloudSample>& samples,
                std::size_t batch_size) {
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "empty evaluation split");
  const auto pred = predict(model, mask, samples, batch_size);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) correct += pred[i] == samples[i].label ? 1 : 0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(samples.size());
}

double rotation_agreement(const Model& model, const Mask* mask, const std::vector<data::PointCloudSample>& samples,
                          Rng& rng, const data::AugmentConfig& cfg) {
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "empty evaluation split");
  std::vector<data::PointCloudSample> rotated = samples;
  for (auto& s : rotated) s.points = data::rotate(s.points, data::random_rotation(rng, cfg));
  const auto a = predict(model, mask, samples);
  const auto b = predict(model, mask, rotated);
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

}  // namespace pclt
