#include "pclt/model.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "pclt/error.hpp"
#include "pclt/rng.hpp"

namespace pclt {

std::string_view to_string(Architecture a) { return a == Architecture::PointNetMini ? "pointnet_mini" : "dgcnn_mini"; }

Architecture architecture_from_string(std::string_view s) {
  if (s == "pointnet_mini" || s == "PointNetMini" || s == "pointnet") return Architecture::PointNetMini;
  if (s == "dgcnn_mini" || s == "DgcnnMini" || s == "dgcnn") return Architecture::DgcnnMini;
  throw Error(ErrorKind::Config, "unknown architecture '" + std::string(s) + "'");
}

void ModelSpec::validate() const {
  if (conv_widths.empty()) throw Error(ErrorKind::Spec, "conv_widths must be nonempty");
  if (num_classes < 2) throw Error(ErrorKind::Spec, "num_classes must be at least 2");
  for (auto w : conv_widths) {
    if (w == 0) throw Error(ErrorKind::Spec, "zero conv width");
  }
  for (auto w : head_widths) {
    if (w == 0) throw Error(ErrorKind::Spec, "zero head width");
  }
  if (input_points == 0) throw Error(ErrorKind::Spec, "input_points must be positive");
  if (architecture == Architecture::DgcnnMini) {
    if (conv_widths.size() < 2) throw Error(ErrorKind::Spec, "dgcnn_mini needs at least one edge stage and an embedding");
    if (k_neighbors == 0) throw Error(ErrorKind::Spec, "k_neighbors must be positive");
    if (k_neighbors >= input_points) {
      throw Error(ErrorKind::Spec, "k_neighbors (" + std::to_string(k_neighbors) + ") must be below input_points (" +
                                       std::to_string(input_points) + ")");
    }
  }
}

IndexMatrix knn_indices(const Tensor& points, std::size_t k) {
  if (points.rank() != 2 || points.dim(1) != 3) {
    throw Error(ErrorKind::Shape, "knn_indices expects [N×3], got " + shape_string(points.shape()));
  }
  const std::size_t n = points.dim(0);
  if (k == 0 || k >= n) {
    throw Error(ErrorKind::Parameter, "k=" + std::to_string(k) + " needs 0 < k < N=" + std::to_string(n));
  }
  IndexMatrix out{n, k, std::vector<std::uint32_t>(n * k)};
  auto p = points.data();
  std::vector<std::pair<double, std::uint32_t>> cand(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = static_cast<double>(p[j * 3]) - p[i * 3];
      const double dy = static_cast<double>(p[j * 3 + 1]) - p[i * 3 + 1];
      const double dz = static_cast<double>(p[j * 3 + 2]) - p[i * 3 + 2];
      cand[c++] = {dx * dx + dy * dy + dz * dz, static_cast<std::uint32_t>(j)};
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::size_t t = 0; t < k; ++t) out.data[i * k + t] = cand[t].second;
  }
  return out;
}

LayerPlan make_plan(const ModelSpec& spec, ParamStore* layout) {
  spec.validate();
  LayerPlan plan;
  ParamStore tmp;
  ParamStore& store = layout ? *layout : tmp;
  std::size_t in = 3;
  const std::size_t stages = spec.conv_widths.size();
  for (std::size_t s = 0; s < stages; ++s) {
    const std::size_t out = spec.conv_widths[s];
    const bool edge = spec.architecture == Architecture::DgcnnMini && s + 1 < stages;
    const std::string prefix = (edge ? "edge" : "conv") + std::to_string(s);
    const std::size_t fan_in = edge ? 2 * in : in;
    ConvStage st{edge ? StageKind::Edge : StageKind::Pointwise, in, out, store.size(), store.size() + 1,
                 store.size() + 2};
    store.add(prefix + ".weight", Tensor({fan_in, out}), Group::Conv, true);
    store.add(prefix + ".scale", Tensor({out}), Group::Conv, false);
    store.add(prefix + ".shift", Tensor({out}), Group::Conv, false);
    plan.conv.push_back(st);
    in = out;
  }
  for (std::size_t h = 0; h <= spec.head_widths.size(); ++h) {
    const bool last = h == spec.head_widths.size();
    const std::size_t out = last ? spec.num_classes : spec.head_widths[h];
    const std::string weight = last ? std::string(kClassifierWeight) : "fc" + std::to_string(h) + ".weight";
    const std::string bias = last ? std::string(kClassifierBias) : "fc" + std::to_string(h) + ".bias";
    FcStage st{in, out, store.size(), store.size() + 1, !last};
    store.add(weight, Tensor({in, out}), Group::FC, true);
    store.add(bias, Tensor({out}), Group::FC, false);
    plan.fc.push_back(st);
    in = out;
  }
  return plan;
}

void init_entry(ParamEntry& entry, std::size_t entry_index, std::uint64_t init_seed, std::size_t fan_in) {
  Rng rng(derive_seed(init_seed, entry_index));
  auto data = entry.tensor.data();
  const auto& name = entry.name;
  const auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".weight")) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : data) v = static_cast<float>(bound * (2.0 * rng.uniform() - 1.0));
  } else if (ends_with(".scale")) {
    std::fill(data.begin(), data.end(), 1.0f);
  } else if (ends_with(".shift")) {
    std::fill(data.begin(), data.end(), 0.0f);
  } else {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : data) v = static_cast<float>(bound * (2.0 * rng.uniform() - 1.0));
  }
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  plan_ = make_plan(spec_, &params_);
  std::size_t fan_in = 1;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].tensor.rank() == 2) fan_in = params_[i].tensor.dim(0);
    init_entry(params_[i], i, spec_.init_seed, fan_in);
  }
}

Model::Model(ModelSpec spec, ParamStore params) : spec_(std::move(spec)) {
  ParamStore layout;
  plan_ = make_plan(spec_, &layout);
  if (layout.size() != params.size()) throw Error(ErrorKind::SpecMismatch, "parameter count does not match spec");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& want = layout[i];
    const auto& got = params[i];
    if (want.name != got.name || want.tensor.shape() != got.tensor.shape() || want.group != got.group ||
        want.prunable != got.prunable) {
      throw Error(ErrorKind::SpecMismatch, "parameter '" + got.name + "' " + shape_string(got.tensor.shape()) +
                                               " does not match spec entry '" + want.name + "' " +
                                               shape_string(want.tensor.shape()));
    }
  }
  params_ = std::move(params);
}

namespace {

void check_batch(const Tensor& batch) {
  if (batch.rank() != 3 || batch.dim(2) != 3) {
    throw Error(ErrorKind::Shape, "batch must be [B×N×3], got " + shape_string(batch.shape()));
  }
}

// Neighbour rows for every point of every cloud, offset into the flattened batch.
std::vector<std::uint32_t> batch_knn(const Tensor& batch, std::size_t k) {
  const std::size_t b = batch.dim(0), n = batch.dim(1);
  std::vector<std::uint32_t> idx;
  idx.reserve(b * n * k);
  for (std::size_t c = 0; c < b; ++c) {
    Tensor cloud({n, 3}, std::vector<float>(batch.data().begin() + static_cast<std::ptrdiff_t>(c * n * 3),
                                             batch.data().begin() + static_cast<std::ptrdiff_t>((c + 1) * n * 3)));
    const auto nn = knn_indices(cloud, k);
    for (auto j : nn.data) idx.push_back(static_cast<std::uint32_t>(c * n + j));
  }
  return idx;
}

}  // namespace

template <class Bind>
Var Model::forward_impl(Graph& graph, const Tensor& batch, Bind&& bind) const {
  check_batch(batch);
  const std::size_t b = batch.dim(0), n = batch.dim(1);
  Var x = graph.constant(batch.reshaped({b * n, 3}));

  std::vector<std::uint32_t> neighbours, centres;
  for (const auto& st : plan_.conv) {
    if (st.kind == StageKind::Edge) {
      if (neighbours.empty()) {
        if (spec_.k_neighbors >= n) {
          throw Error(ErrorKind::Parameter, "k_neighbors must be below the cloud size " + std::to_string(n));
        }
        neighbours = batch_knn(batch, spec_.k_neighbors);
        centres.resize(neighbours.size());
        for (std::size_t i = 0; i < centres.size(); ++i) {
          centres[i] = static_cast<std::uint32_t>(i / spec_.k_neighbors);
        }
      }
      Var centre = gather_rows(x, centres);
      Var nbr = gather_rows(x, neighbours);
      Var edge = concat_cols(centre, sub(nbr, centre));
      Var h = affine_relu(matmul(edge, bind(st.weight)), bind(st.scale), bind(st.shift));
      x = max_over_groups(h, spec_.k_neighbors);
    } else {
      x = affine_relu(matmul(x, bind(st.weight)), bind(st.scale), bind(st.shift));
    }
  }
  x = max_over_groups(x, n);
  for (const auto& st : plan_.fc) {
    x = add_bias(matmul(x, bind(st.weight)), bind(st.bias));
    if (st.relu) x = relu(x);
  }
  return x;
}

Var Model::forward(Graph& graph, const Mask* mask, const Tensor& batch) {
  if (mask) mask->check_aligned(params_);
  return forward_impl(graph, batch, [&](std::size_t i) {
    return graph.parameter(params_[i].tensor, mask ? mask->for_param(i) : nullptr);
  });
}

Tensor Model::classify(const Mask* mask, const Tensor& batch) const {
  if (mask) mask->check_aligned(params_);
  Graph graph;
  Var out = forward_impl(graph, batch, [&](std::size_t i) {
    Tensor t = params_[i].tensor;
    t.drop_grad();
    if (const BitVector* keep = mask ? mask->for_param(i) : nullptr) {
      auto d = t.data();
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (!keep->test(j)) d[j] = 0.0f;
      }
    }
    return graph.constant(std::move(t));
  });
  return out.value();
}

std::size_t Model::prunable_count(const ModelSpec& spec) {
  spec.validate();
  std::size_t total = 0, in = 3;
  for (std::size_t s = 0; s < spec.conv_widths.size(); ++s) {
    const bool edge = spec.architecture == Architecture::DgcnnMini && s + 1 < spec.conv_widths.size();
    total += (edge ? 2 * in : in) * spec.conv_widths[s];
    in = spec.conv_widths[s];
  }
  for (auto w : spec.head_widths) {
    total += in * w;
    in = w;
  }
  return total + in * spec.num_classes;
}

std::size_t Model::total_count(const ModelSpec& spec) {
  std::size_t extra = 0;
  for (auto w : spec.conv_widths) extra += 2 * w;
  for (auto w : spec.head_widths) extra += w;
  return prunable_count(spec) + extra + spec.num_classes;
}

Tensor forward_classify(const Model& model, const Mask& mask, const Tensor& batch) {
  return model.classify(&mask, batch);
}

std::vector<GroupSummary> layer_groups(const ParamStore& params) {
  std::vector<GroupSummary> out(2);
  out[0].group = Group::Conv;
  out[1].group = Group::FC;
  std::size_t total = 0;
  for (const auto& e : params) {
    if (!e.prunable) continue;
    auto& g = out[e.group == Group::Conv ? 0 : 1];
    g.names.push_back(e.name);
    g.counts.push_back(e.tensor.numel());
    g.total += e.tensor.numel();
    total += e.tensor.numel();
  }
  if (total > 0) {
    out[0].fraction = static_cast<double>(out[0].total) / static_cast<double>(total);
    out[1].fraction = static_cast<double>(out[1].total) / static_cast<double>(total);
  }
  return out;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw Error(ErrorKind::Dimension, "argmax_rows expects a matrix");
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace pclt
