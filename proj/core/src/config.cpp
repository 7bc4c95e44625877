#include "pclt/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "tomlplusplus/toml.hpp"

#include "pclt/error.hpp"

namespace pclt {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw Error(ErrorKind::Config, path + ": " + what); }

// One table of the document. Every key read is remembered so leftovers can be
// reported as unknown fields.
class Section {
 public:
  Section(const toml::table* table, std::string path) : table_(table), path_(std::move(path)) {}

  bool present() const { return table_ != nullptr; }

  std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const toml::node* get(std::string_view key) {
    seen_.insert(std::string(key));
    return table_ ? table_->get(key) : nullptr;
  }

  Section table(std::string_view key) {
    const toml::node* n = get(key);
    if (!n) return Section(nullptr, field(key));
    if (!n->is_table()) fail(field(key), "expected a table");
    return Section(n->as_table(), field(key));
  }

  void read(std::string_view key, std::int64_t& out, std::int64_t lo = std::numeric_limits<std::int64_t>::min()) {
    const toml::node* n = get(key);
    if (!n) return;
    if (!n->is_integer()) fail(field(key), "expected an integer");
    const auto v = n->as_integer()->get();
    if (v < lo) fail(field(key), "must be at least " + std::to_string(lo));
    out = v;
  }

  void read(std::string_view key, std::size_t& out, std::size_t lo = 0) {
    std::int64_t v = static_cast<std::int64_t>(out);
    read(key, v, static_cast<std::int64_t>(lo));
    out = static_cast<std::size_t>(v);
  }

  void read_u64(std::string_view key, std::uint64_t& out) {
    const toml::node* n = get(key);
    if (!n) return;
    if (!n->is_integer() || n->as_integer()->get() < 0) fail(field(key), "expected a non-negative integer");
    out = static_cast<std::uint64_t>(n->as_integer()->get());
  }

  void read(std::string_view key, double& out) {
    const toml::node* n = get(key);
    if (!n) return;
    out = number(*n, field(key));
  }

  void read(std::string_view key, float& out) {
    double v = out;
    read(key, v);
    out = static_cast<float>(v);
  }

  void read(std::string_view key, bool& out) {
    const toml::node* n = get(key);
    if (!n) return;
    if (!n->is_boolean()) fail(field(key), "expected true or false");
    out = n->as_boolean()->get();
  }

  bool read(std::string_view key, std::string& out) {
    const toml::node* n = get(key);
    if (!n) return false;
    if (!n->is_string()) fail(field(key), "expected a string");
    out = n->as_string()->get();
    return true;
  }

  template <class Parse, class T>
  void read_enum(std::string_view key, T& out, Parse parse) {
    std::string s;
    if (!read(key, s)) return;
    try {
      out = parse(s);
    } catch (const Error& e) {
      fail(field(key), "unknown value '" + s + "'");
    }
  }

  void read(std::string_view key, std::vector<double>& out) {
    const auto* arr = array(key);
    if (!arr) return;
    out.clear();
    for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(number(*arr->get(i), element(key, i)));
  }

  void read(std::string_view key, std::vector<std::size_t>& out) {
    const auto* arr = array(key);
    if (!arr) return;
    out.clear();
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const toml::node* n = arr->get(i);
      if (!n->is_integer() || n->as_integer()->get() < 0) fail(element(key, i), "expected a non-negative integer");
      out.push_back(static_cast<std::size_t>(n->as_integer()->get()));
    }
  }

  void read(std::string_view key, std::vector<std::string>& out) {
    const auto* arr = array(key);
    if (!arr) return;
    out.clear();
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const toml::node* n = arr->get(i);
      if (!n->is_string()) fail(element(key, i), "expected a string");
      out.push_back(n->as_string()->get());
    }
  }

  void reject_unknown() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!seen_.count(std::string(k.str()))) fail(field(k.str()), "unknown field");
    }
  }

 private:
  const toml::array* array(std::string_view key) {
    const toml::node* n = get(key);
    if (!n) return nullptr;
    if (!n->is_array()) fail(field(key), "expected an array");
    return n->as_array();
  }

  std::string element(std::string_view key, std::size_t i) const { return field(key) + "[" + std::to_string(i) + "]"; }

  static double number(const toml::node& n, const std::string& path) {
    if (n.is_floating_point()) return n.as_floating_point()->get();
    if (n.is_integer()) return static_cast<double>(n.as_integer()->get());
    fail(path, "expected a number");
  }

  const toml::table* table_;
  std::string path_;
  std::set<std::string> seen_;
};

// Shortest decimal that reads back as the same float.
double float_literal(float f) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, f);
  return std::strtod(std::string(buf, res.ptr).c_str(), nullptr);
}

template <class T>
toml::array to_array(const std::vector<T>& v) {
  toml::array a;
  for (const auto& x : v) {
    if constexpr (std::is_same_v<T, std::size_t>) {
      a.push_back(static_cast<std::int64_t>(x));
    } else {
      a.push_back(x);
    }
  }
  return a;
}

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

void check_percentages(const std::vector<double>& v, const std::string& path, bool increasing) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string at = path + "[" + std::to_string(i) + "]";
    if (!(v[i] > 0.0 && v[i] < 100.0)) fail(at, "must lie strictly between 0 and 100");
    if (increasing && i > 0 && !(v[i] > v[i - 1])) fail(at, "sweep points must be strictly increasing");
  }
}

}  // namespace

ModelSpec ExperimentConfig::model_for(std::uint64_t run_seed) const {
  ModelSpec s = model;
  s.num_classes = dataset.classes.size();
  s.input_points = dataset.points_per_sample;
  s.init_seed = run_seed;
  return s;
}

std::vector<std::uint64_t> ExperimentConfig::run_seeds() const {
  std::vector<std::uint64_t> out;
  for (std::size_t r = 0; r < repeats; ++r) out.push_back(seed + r);
  return out;
}

void ExperimentConfig::validate() const {
  try {
    dataset.validate();
  } catch (const Error& e) {
    fail("dataset", e.what());
  }
  try {
    model_for(seed).validate();
  } catch (const Error& e) {
    fail("model", e.what());
  }
  if (cycle.epochs == 0) fail("train.epochs", "must be at least 1");
  if (cycle.batch_size == 0) fail("train.batch_size", "must be at least 1");
  if (!(cycle.learning_rate > 0.0f) || !std::isfinite(cycle.learning_rate)) {
    fail("train.learning_rate", "must be positive and finite");
  }
  const auto& a = cycle.augment;
  if (!(a.full_rotation_prob >= 0.0 && a.full_rotation_prob <= 1.0)) {
    fail("train.augment.full_rotation_prob", "must lie in [0, 1]");
  }
  if (a.jitter_sigma < 0.0) fail("train.augment.jitter_sigma", "must be non-negative");
  if (a.jitter_clip < 0.0) fail("train.augment.jitter_clip", "must be non-negative");
  if (!(a.scale_lo > 0.0 && a.scale_lo <= a.scale_hi)) fail("train.augment.scale_lo", "need 0 < scale_lo <= scale_hi");
  if (!(prune.per_round_fraction > 0.0 && prune.per_round_fraction < 1.0)) fail("prune.rate", "must lie in (0, 1)");
  if (sweep_points.empty()) fail("sweep.points", "must not be empty");
  check_percentages(sweep_points, "sweep.points", true);
  if (!(ablate_rate > 0.0 && ablate_rate < 100.0)) fail("ablate.rate", "must lie strictly between 0 and 100");
  check_percentages(transfer.levels, "transfer.levels", false);
  if (bench.batches.empty()) fail("bench.batches", "must not be empty");
  for (std::size_t i = 0; i < bench.batches.size(); ++i) {
    if (bench.batches[i] == 0) fail("bench.batches[" + std::to_string(i) + "]", "must be at least 1");
  }
  if (bench.warmup < 10) fail("bench.warmup", "must be at least 10");
  if (bench.iterations == 0) fail("bench.iterations", "must be at least 1");
  if (repeats == 0) fail("repeats", "must be at least 1");
  if (jobs == 0) fail("jobs", "must be at least 1");
  if (output_dir.empty()) fail("output", "must not be empty");
}

ExperimentConfig parse_config(std::string_view text, std::string_view source_name) {
  toml::table doc;
  try {
    doc = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    const auto& at = e.source().begin;
    throw Error(ErrorKind::Config, std::string(source_name) + ":" + std::to_string(at.line) + ":" +
                                       std::to_string(at.column) + ": " + std::string(e.description()));
  }

  ExperimentConfig c;
  Section root(&doc, "");
  root.read_u64("seed", c.seed);
  root.read("repeats", c.repeats);
  root.read("jobs", c.jobs);
  std::string out;
  if (root.read("output", out)) c.output_dir = out;
  root.read("preset", c.preset);

  Section ds = root.table("dataset");
  if (!ds.present()) fail("dataset", "missing required table");
  std::vector<std::string> classes;
  ds.read("classes", classes);
  if (!classes.empty()) {
    c.dataset.classes.clear();
    for (std::size_t i = 0; i < classes.size(); ++i) {
      try {
        c.dataset.classes.push_back(data::shape_from_string(classes[i]));
      } catch (const Error&) {
        fail("dataset.classes[" + std::to_string(i) + "]", "unknown shape '" + classes[i] + "'");
      }
    }
  }
  ds.read("samples_per_class", c.dataset.samples_per_class);
  ds.read("points_per_sample", c.dataset.points_per_sample);
  ds.read("train_fraction", c.dataset.train_fraction);
  ds.read_u64("seed", c.dataset.base_seed);
  ds.read("noise_sigma", c.dataset.noise_sigma);
  ds.reject_unknown();

  Section md = root.table("model");
  md.read_enum("architecture", c.model.architecture, architecture_from_string);
  md.read("conv_widths", c.model.conv_widths);
  md.read("head_widths", c.model.head_widths);
  md.read("k_neighbors", c.model.k_neighbors);
  md.reject_unknown();

  Section tr = root.table("train");
  tr.read("epochs", c.cycle.epochs);
  tr.read("batch_size", c.cycle.batch_size);
  tr.read_enum("optimizer", c.cycle.optimizer, optimizer_kind_from_string);
  tr.read("learning_rate", c.cycle.learning_rate);
  tr.read_enum("schedule", c.cycle.schedule, lr_schedule_from_string);
  Section aug = tr.table("augment");
  aug.read("up_rotation", c.cycle.augment.up_rotation);
  aug.read("full_rotation_prob", c.cycle.augment.full_rotation_prob);
  aug.read("jitter_sigma", c.cycle.augment.jitter_sigma);
  aug.read("jitter_clip", c.cycle.augment.jitter_clip);
  aug.read("scale_lo", c.cycle.augment.scale_lo);
  aug.read("scale_hi", c.cycle.augment.scale_hi);
  aug.reject_unknown();
  tr.reject_unknown();

  Section pr = root.table("prune");
  pr.read_enum("scope", c.prune.scope, scope_from_string);
  pr.read("rate", c.prune.per_round_fraction);
  pr.read_enum("filter", c.prune.filter, group_filter_from_string);
  std::string rewind;
  if (pr.read("rewind", rewind) && rewind != "initial") fail(pr.field("rewind"), "only 'initial' is supported");
  pr.reject_unknown();

  Section sw = root.table("sweep");
  sw.read("points", c.sweep_points);
  sw.reject_unknown();

  Section ab = root.table("ablate");
  ab.read("rate", c.ablate_rate);
  ab.reject_unknown();

  Section tf = root.table("transfer");
  tf.read("levels", c.transfer.levels);
  tf.read_enum("weights", c.transfer.weights, weight_source_from_string);
  tf.read("epochs", c.transfer.epochs);
  tf.reject_unknown();

  Section bn = root.table("bench");
  bn.read("batches", c.bench.batches);
  bn.read("warmup", c.bench.warmup);
  bn.read("iterations", c.bench.iterations);
  bn.reject_unknown();

  root.reject_unknown();

  if (!c.preset.empty()) apply_preset(c, c.preset);
  c.prune.cycle = c.cycle;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Path, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string dump_config(const ExperimentConfig& c) {
  toml::table root;
  root.insert("seed", static_cast<std::int64_t>(c.seed));
  root.insert("repeats", as_int(c.repeats));
  root.insert("jobs", as_int(c.jobs));
  root.insert("output", c.output_dir.generic_string());
  if (!c.preset.empty()) root.insert("preset", c.preset);

  toml::array classes;
  for (auto k : c.dataset.classes) classes.push_back(std::string(data::to_string(k)));
  root.insert("dataset", toml::table{{"classes", classes},
                                     {"samples_per_class", as_int(c.dataset.samples_per_class)},
                                     {"points_per_sample", as_int(c.dataset.points_per_sample)},
                                     {"train_fraction", c.dataset.train_fraction},
                                     {"seed", static_cast<std::int64_t>(c.dataset.base_seed)},
                                     {"noise_sigma", c.dataset.noise_sigma}});

  root.insert("model", toml::table{{"architecture", std::string(to_string(c.model.architecture))},
                                   {"conv_widths", to_array(c.model.conv_widths)},
                                   {"head_widths", to_array(c.model.head_widths)},
                                   {"k_neighbors", as_int(c.model.k_neighbors)}});

  const auto& a = c.cycle.augment;
  root.insert("train", toml::table{{"epochs", as_int(c.cycle.epochs)},
                                   {"batch_size", as_int(c.cycle.batch_size)},
                                   {"optimizer", std::string(to_string(c.cycle.optimizer))},
                                   {"learning_rate", float_literal(c.cycle.learning_rate)},
                                   {"schedule", std::string(to_string(c.cycle.schedule))},
                                   {"augment", toml::table{{"up_rotation", a.up_rotation},
                                                           {"full_rotation_prob", a.full_rotation_prob},
                                                           {"jitter_sigma", a.jitter_sigma},
                                                           {"jitter_clip", a.jitter_clip},
                                                           {"scale_lo", a.scale_lo},
                                                           {"scale_hi", a.scale_hi}}}});

  root.insert("prune", toml::table{{"scope", std::string(to_string(c.prune.scope))},
                                   {"rate", c.prune.per_round_fraction},
                                   {"filter", std::string(to_string(c.prune.filter))},
                                   {"rewind", "initial"}});
  root.insert("sweep", toml::table{{"points", to_array(c.sweep_points)}});
  root.insert("ablate", toml::table{{"rate", c.ablate_rate}});
  root.insert("transfer", toml::table{{"levels", to_array(c.transfer.levels)},
                                      {"weights", std::string(to_string(c.transfer.weights))},
                                      {"epochs", as_int(c.transfer.epochs)}});
  root.insert("bench", toml::table{{"batches", to_array(c.bench.batches)},
                                   {"warmup", as_int(c.bench.warmup)},
                                   {"iterations", as_int(c.bench.iterations)}});

  std::ostringstream ss;
  ss << root << "\n";
  return ss.str();
}

void apply_preset(ExperimentConfig& c, std::string_view name) {
  if (name == "pointnet-paper") {
    c.model.architecture = Architecture::PointNetMini;
    c.cycle.optimizer = OptimizerKind::Adam;
    c.cycle.learning_rate = 1e-4f;
    c.cycle.batch_size = 256;
  } else if (name == "dgcnn-paper") {
    c.model.architecture = Architecture::DgcnnMini;
    c.cycle.optimizer = OptimizerKind::SGD;
    c.cycle.learning_rate = 0.1f;
    c.cycle.batch_size = 32;
  } else if (name == "pointcnn-paper") {
    c.cycle.optimizer = OptimizerKind::Adam;
    c.cycle.learning_rate = 1e-5f;
    c.cycle.batch_size = 128;
  } else {
    fail("preset", "unknown preset '" + std::string(name) + "'");
  }
  c.preset = std::string(name);
  c.prune.cycle = c.cycle;
}

std::vector<std::string> preset_names() { return {"pointnet-paper", "dgcnn-paper", "pointcnn-paper"}; }

}  // namespace pclt
