#include "pclt/ticket.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "pclt/error.hpp"
#include "pclt/rng.hpp"

namespace pclt {

namespace {

using json = nlohmann::json;

constexpr std::uint8_t kMagic[4] = {'P', 'C', 'L', 'T'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    uint(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void floats(std::span<const float> v) {
    for (float f : v) uint(std::bit_cast<std::uint32_t>(f));
  }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > in_.size() - pos_) {
      throw Error(ErrorKind::Corruption, "ticket truncated at byte " + std::to_string(pos_));
    }
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <class T>
  T uint() {
    auto s = take(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(s[i]) << (8 * i));
    return v;
  }
  std::string str() {
    const auto n = uint<std::uint32_t>();
    auto s = take(n);
    return std::string(s.begin(), s.end());
  }
  void floats(std::span<float> out) {
    for (auto& f : out) f = std::bit_cast<float>(uint<std::uint32_t>());
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

json spec_to_json(const ModelSpec& s) {
  return json{{"architecture", std::string(to_string(s.architecture))},
              {"input_points", s.input_points},
              {"conv_widths", s.conv_widths},
              {"head_widths", s.head_widths},
              {"num_classes", s.num_classes},
              {"k_neighbors", s.k_neighbors},
              {"init_seed", s.init_seed}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  s.architecture = architecture_from_string(j.at("architecture").get<std::string>());
  s.input_points = j.at("input_points").get<std::size_t>();
  s.conv_widths = j.at("conv_widths").get<std::vector<std::size_t>>();
  s.head_widths = j.at("head_widths").get<std::vector<std::size_t>>();
  s.num_classes = j.at("num_classes").get<std::size_t>();
  s.k_neighbors = j.at("k_neighbors").get<std::size_t>();
  s.init_seed = j.at("init_seed").get<std::uint64_t>();
  return s;
}

// Everything before the checksum trailer.
std::vector<std::uint8_t> encode_body(const Ticket& t, std::uint16_t version) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.uint(version);
  const json manifest{{"spec", spec_to_json(t.spec)},
                      {"provenance", t.provenance},
                      {"mask_round", t.mask.round_index()},
                      {"entries", t.initial.size()}};
  w.str(manifest.dump());
  for (std::size_t i = 0; i < t.initial.size(); ++i) {
    const auto& e = t.initial[i];
    w.str(e.name);
    w.uint(static_cast<std::uint8_t>(e.group));
    w.uint(static_cast<std::uint8_t>(e.prunable ? 1 : 0));
    w.uint(static_cast<std::uint8_t>(e.tensor.rank()));
    for (auto d : e.tensor.shape()) w.uint(static_cast<std::uint64_t>(d));
    w.floats(e.tensor.data());
    w.floats(t.trained[i].tensor.data());
    const BitVector* keep = t.mask.for_param(i);
    w.uint(static_cast<std::uint8_t>(keep ? 1 : 0));
    if (keep) {
      const auto packed = keep->to_bytes();
      w.bytes(packed.data(), packed.size());
    }
  }
  return std::move(w.buffer());
}

std::uint64_t fnv(std::span<const std::uint8_t> bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.digest();
}

void check_layouts(const ParamStore& a, const ParamStore& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::Provenance, "initial and trained weights differ in entry count");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].tensor.shape() != b[i].tensor.shape() || a[i].group != b[i].group ||
        a[i].prunable != b[i].prunable) {
      throw Error(ErrorKind::Provenance, "initial and trained layouts differ at '" + a[i].name + "'");
    }
  }
}

}  // namespace

void Ticket::validate() const {
  check_layouts(initial, trained);
  mask.check_aligned(trained);
  for (const auto& entry : mask.entries()) {
    const auto w = trained[entry.param_index].tensor.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!entry.keep.test(i) && w[i] != 0.0f) {
        throw Error(ErrorKind::Provenance, "pruned weight " + entry.name + "[" + std::to_string(i) + "] is nonzero");
      }
    }
  }
}

std::uint64_t Ticket::checksum() const { return fnv(encode_body(*this, kTicketVersion)); }

bool Ticket::operator==(const Ticket& other) const {
  return spec == other.spec && initial.bit_equal(other.initial) && trained.bit_equal(other.trained) &&
         mask == other.mask && provenance == other.provenance;
}

std::vector<std::uint8_t> encode_ticket(const Ticket& ticket) {
  ticket.validate();
  auto body = encode_body(ticket, kTicketVersion);
  const std::uint64_t sum = fnv(body);
  for (std::size_t i = 0; i < 8; ++i) body.push_back(static_cast<std::uint8_t>(sum >> (8 * i)));
  return body;
}

Ticket decode_ticket(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic + 2 + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::Corruption, "not a ticket file (bad magic or too short)");
  }
  const auto body = bytes.first(bytes.size() - 8);
  Reader trailer(bytes.last(8));
  const auto stored = trailer.uint<std::uint64_t>();
  if (stored != fnv(body)) throw Error(ErrorKind::Corruption, "ticket checksum mismatch");

  Reader r(body);
  r.take(sizeof kMagic);
  const auto version = r.uint<std::uint16_t>();
  if (version != kTicketVersion) {
    throw Error(ErrorKind::Version, "ticket version " + std::to_string(version) + ", this build reads " +
                                        std::to_string(kTicketVersion));
  }

  Ticket t;
  std::size_t entries = 0;
  try {
    const json manifest = json::parse(r.str());
    t.spec = spec_from_json(manifest.at("spec"));
    t.provenance = manifest.at("provenance").get<std::map<std::string, std::string>>();
    t.mask.set_round_index(manifest.at("mask_round").get<std::size_t>());
    entries = manifest.at("entries").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, std::string("ticket manifest: ") + e.what());
  }

  for (std::size_t i = 0; i < entries; ++i) {
    std::string name = r.str();
    const auto group = r.uint<std::uint8_t>();
    const auto prunable = r.uint<std::uint8_t>();
    const auto rank = r.uint<std::uint8_t>();
    if (group > 1 || prunable > 1 || rank == 0) throw Error(ErrorKind::Corruption, "bad record header for '" + name + "'");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.uint<std::uint64_t>());
    const std::size_t n = shape_numel(shape);
    Tensor initial(shape), trained(shape);
    r.floats(initial.data());
    r.floats(trained.data());
    const auto has_mask = r.uint<std::uint8_t>();
    if (has_mask > 1 || (has_mask == 1) != (prunable == 1)) {
      throw Error(ErrorKind::Corruption, "mask flag disagrees with prunable flag for '" + name + "'");
    }
    if (has_mask) {
      t.mask.entries().push_back(Mask::Entry{i, name, BitVector::from_bytes(r.take((n + 7) / 8), n)});
    }
    t.initial.add(name, std::move(initial), static_cast<Group>(group), prunable == 1);
    t.trained.add(std::move(name), std::move(trained), static_cast<Group>(group), prunable == 1);
  }
  if (!r.done()) throw Error(ErrorKind::Corruption, "trailing bytes after the last record");
  t.validate();
  return t;
}

void export_ticket(const Ticket& ticket, const std::filesystem::path& path) {
  const auto bytes = encode_ticket(ticket);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

Ticket import_ticket(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Path, "cannot open ticket " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ticket(bytes);
}

Ticket import_ticket(const std::filesystem::path& path, const ModelSpec& expected) {
  Ticket t = import_ticket(path);
  ParamStore layout;
  make_plan(expected, &layout);
  bool ok = t.spec.architecture == expected.architecture && layout.size() == t.initial.size();
  for (std::size_t i = 0; ok && i < layout.size(); ++i) {
    const bool head = layout[i].name == kClassifierWeight || layout[i].name == kClassifierBias;
    ok = layout[i].name == t.initial[i].name && (head || layout[i].tensor.shape() == t.initial[i].tensor.shape());
  }
  if (!ok) {
    throw Error(ErrorKind::SpecMismatch, "ticket " + std::string(to_string(t.spec.architecture)) +
                                             " backbone does not fit the expected " +
                                             std::string(to_string(expected.architecture)) + " spec");
  }
  return t;
}

std::string_view to_string(WeightSource s) { return s == WeightSource::Trained ? "trained" : "rewound"; }

WeightSource weight_source_from_string(std::string_view s) {
  if (s == "trained") return WeightSource::Trained;
  if (s == "rewound") return WeightSource::Rewound;
  throw Error(ErrorKind::Config, "unknown weight source '" + std::string(s) + "'");
}

TransferInit instantiate_transfer(const Ticket& ticket, std::size_t target_num_classes, WeightSource source,
                                  std::uint64_t head_seed) {
  ticket.validate();
  ModelSpec spec = ticket.spec;
  spec.num_classes = target_num_classes;
  Model fresh(spec);
  ParamStore params = fresh.params();
  const ParamStore& from = source == WeightSource::Trained ? ticket.trained : ticket.initial;
  const bool rebuild_head = target_num_classes != ticket.spec.num_classes;
  if (from.size() != params.size()) throw Error(ErrorKind::SpecMismatch, "ticket layout does not fit its own spec");

  Mask mask = Mask::ones(params);
  mask.set_round_index(ticket.mask.round_index());
  std::size_t fan_in = 3;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& e = params[i];
    const bool head = e.name == kClassifierWeight || e.name == kClassifierBias;
    if (e.tensor.rank() == 2) fan_in = e.tensor.dim(0);
    if (head && rebuild_head) {
      init_entry(e, i, head_seed, fan_in);
      continue;
    }
    if (from[i].name != e.name || from[i].tensor.shape() != e.tensor.shape()) {
      throw Error(ErrorKind::SpecMismatch, "backbone entry '" + e.name + "' " + shape_string(e.tensor.shape()) +
                                               " vs ticket " + shape_string(from[i].tensor.shape()));
    }
    auto dst = e.tensor.data();
    const auto src = from[i].tensor.data();
    std::copy(src.begin(), src.end(), dst.begin());
    if (const BitVector* keep = ticket.mask.for_param(i)) {
      for (auto& m : mask.entries()) {
        if (m.param_index == i) m.keep = *keep;
      }
      for (std::size_t j = 0; j < dst.size(); ++j) {
        if (!keep->test(j)) dst[j] = 0.0f;
      }
    }
  }
  return TransferInit{Model(spec, std::move(params)), std::move(mask)};
}

void check_frozen(const ParamStore& params, const Mask& mask) {
  for (const auto& entry : mask.entries()) {
    const auto w = params[entry.param_index].tensor.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!entry.keep.test(i) && w[i] != 0.0f) {
        throw Error(ErrorKind::Provenance, "pruned weight " + entry.name + "[" + std::to_string(i) +
                                               "] revived during fine-tuning");
      }
    }
  }
}

FineTuneResult fine_tune(Model& model, const Mask& mask, const data::Dataset& dataset, const TrainCycle& budget,
                         std::uint64_t seed, std::optional<double> baseline_pct) {
  mask.check_aligned(model.params());
  check_frozen(model.params(), mask);
  FineTuneResult result;
  result.baseline_pct = baseline_pct;
  if (budget.epochs > 0) {
    Rng rng(seed);
    result.stats = train_cycle(model, &mask, dataset, budget, rng,
                               [&](std::size_t, const Model& m) { check_frozen(m.params(), mask); });
  }
  result.accuracy_pct = evaluate(model, &mask, dataset.test());
  return result;
}

}  // namespace pclt
