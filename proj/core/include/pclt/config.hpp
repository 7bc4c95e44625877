#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pclt/data.hpp"
#include "pclt/model.hpp"
#include "pclt/pruning.hpp"
#include "pclt/ticket.hpp"
#include "pclt/train.hpp"

namespace pclt {

struct TransferSettings {
  std::vector<double> levels{60.0, 99.0};
  WeightSource weights = WeightSource::Trained;
  /// Fine-tuning budget on the target task; zero means the training cycle's epochs.
  std::size_t epochs = 0;
};

struct BenchSettings {
  std::vector<std::size_t> batches{1, 16};
  std::size_t warmup = 10;
  std::size_t iterations = 30;
};

/// Everything a harness command needs. The model's class count follows the
/// dataset and its init seed follows the run seed.
struct ExperimentConfig {
  ModelSpec model;
  data::DatasetSpec dataset;
  TrainCycle cycle;
  PruneConfig prune;
  /// Target sparsities in percent, strictly increasing inside (0, 100).
  std::vector<double> sweep_points{10, 20, 30, 40, 60, 90, 95, 99};
  double ablate_rate = 99.0;
  TransferSettings transfer;
  BenchSettings bench;
  std::filesystem::path output_dir = "runs";
  std::uint64_t seed = 1;
  /// Independent runs per cell with seeds seed, seed+1, ...
  std::size_t repeats = 1;
  std::size_t jobs = 1;
  /// Name of the preset applied on top of the file, if any.
  std::string preset;

  /// Throws Config naming the offending field.
  void validate() const;
  /// Spec with num_classes and init_seed filled in for one run.
  ModelSpec model_for(std::uint64_t run_seed) const;
  std::vector<std::uint64_t> run_seeds() const;
};

/// Parses the key = value / [table] config text. Errors carry the field path,
/// e.g. "train.epochs: expected an integer". The [dataset] table is required.
ExperimentConfig parse_config(std::string_view text, std::string_view source_name = "<config>");
/// Throws Path if the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(dump_config(c)) reproduces c.
std::string dump_config(const ExperimentConfig& config);

/// Paper optimizer settings: "pointnet-paper", "dgcnn-paper", "pointcnn-paper".
/// Throws Config for an unknown name.
void apply_preset(ExperimentConfig& config, std::string_view name);
std::vector<std::string> preset_names();

}  // namespace pclt
