#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pclt/graph.hpp"
#include "pclt/mask.hpp"
#include "pclt/param_store.hpp"

namespace pclt {

enum class Architecture { PointNetMini, DgcnnMini };

std::string_view to_string(Architecture a);
Architecture architecture_from_string(std::string_view s);

struct ModelSpec {
  Architecture architecture = Architecture::PointNetMini;
  std::size_t input_points = 256;
  /// Per-point stages. For DgcnnMini all but the last are EdgeConv stages and
  /// the last is a pointwise embedding.
  std::vector<std::size_t> conv_widths{128, 128, 128};
  /// Hidden classifier widths; the output layer of num_classes is appended.
  std::vector<std::size_t> head_widths{128};
  std::size_t num_classes = 8;
  std::size_t k_neighbors = 8;
  std::uint64_t init_seed = 0;

  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

/// Row-major integer matrix.
struct IndexMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> data;

  std::uint32_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// k nearest neighbours of every point by squared Euclidean distance, self
/// excluded, ties to the lower index. points: [N×3].
IndexMatrix knn_indices(const Tensor& points, std::size_t k);

enum class StageKind { Pointwise, Edge };

struct ConvStage {
  StageKind kind = StageKind::Pointwise;
  std::size_t in = 0, out = 0;
  std::size_t weight = 0, scale = 0, shift = 0;  // ParamStore indices
};

struct FcStage {
  std::size_t in = 0, out = 0;
  std::size_t weight = 0, bias = 0;
  bool relu = true;
};

/// Architecture as a sequence of stages over ParamStore indices. Consumed by
/// the graph forward here and by the compiled inference engine.
struct LayerPlan {
  std::vector<ConvStage> conv;
  std::vector<FcStage> fc;
};

/// Parameter names of the output layer; everything else is backbone.
inline constexpr std::string_view kClassifierWeight = "classifier.weight";
inline constexpr std::string_view kClassifierBias = "classifier.bias";

class Model {
 public:
  /// Fresh model with seeded fan-in uniform initialization.
  explicit Model(ModelSpec spec);
  /// Wraps existing parameters; throws SpecMismatch if they do not fit the spec.
  Model(ModelSpec spec, ParamStore params);

  const ModelSpec& spec() const noexcept { return spec_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  const LayerPlan& plan() const noexcept { return plan_; }

  /// Training forward: gradients flow into params(); the mask (if any) is
  /// applied multiplicatively at every use. batch: [B×N×3] -> logits [B×C].
  Var forward(Graph& graph, const Mask* mask, const Tensor& batch);

  /// Inference forward on m ⊙ θ without touching gradient buffers.
  Tensor classify(const Mask* mask, const Tensor& batch) const;

  /// Closed-form parameter counts for a spec.
  static std::size_t prunable_count(const ModelSpec& spec);
  static std::size_t total_count(const ModelSpec& spec);

 private:
  template <class Bind>
  Var forward_impl(Graph& graph, const Tensor& batch, Bind&& bind) const;

  ModelSpec spec_;
  ParamStore params_;
  LayerPlan plan_;
};

Tensor forward_classify(const Model& model, const Mask& mask, const Tensor& batch);

/// Builds the parameter layout (zeros) and stage plan for a spec.
LayerPlan make_plan(const ModelSpec& spec, ParamStore* layout);
/// Fan-in uniform initialization of one entry, seeded by (init_seed, entry index).
/// Weights draw from U(±√(6/fan_in)), biases from U(±1/√fan_in); scale = 1, shift = 0.
void init_entry(ParamEntry& entry, std::size_t entry_index, std::uint64_t init_seed, std::size_t fan_in);

struct GroupSummary {
  Group group = Group::Conv;
  std::vector<std::string> names;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  /// Share of all prunable parameters.
  double fraction = 0.0;
};

/// Conv and FC summaries over prunable entries, in that order.
std::vector<GroupSummary> layer_groups(const ParamStore& params);

/// argmax per row, lowest index on ties.
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace pclt
