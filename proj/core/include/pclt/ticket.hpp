#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pclt/data.hpp"
#include "pclt/mask.hpp"
#include "pclt/model.hpp"
#include "pclt/param_store.hpp"
#include "pclt/train.hpp"

namespace pclt {

inline constexpr std::uint16_t kTicketVersion = 1;

/// A pruned subnetwork: θ⁽⁰⁾, the final mask m⁽ᴶ⁾ and the trained θ⁽ᴶ⁾.
/// Masked-out weights are exactly zero in `trained`.
struct Ticket {
  ModelSpec spec;
  ParamStore initial;
  ParamStore trained;
  Mask mask;
  /// Source dataset id, method, config, seeds, library version.
  std::map<std::string, std::string> provenance;

  /// Throws Provenance if layouts disagree or a pruned weight is nonzero.
  void validate() const;
  /// FNV-1a 64 of the encoded body; the value stored in the file trailer.
  std::uint64_t checksum() const;
  /// Bitwise equality of every field.
  bool operator==(const Ticket& other) const;
};

/// File image: "PCLT", u16 version, u32-length UTF-8 JSON manifest, per-entry
/// records, u64 FNV-1a checksum of every preceding byte. Little-endian.
std::vector<std::uint8_t> encode_ticket(const Ticket& ticket);
/// Throws Corruption (bad magic, truncation, checksum) or Version.
Ticket decode_ticket(std::span<const std::uint8_t> bytes);

void export_ticket(const Ticket& ticket, const std::filesystem::path& path);
Ticket import_ticket(const std::filesystem::path& path);
/// As import_ticket, and throws SpecMismatch unless the ticket architecture
/// and backbone shapes match `expected`.
Ticket import_ticket(const std::filesystem::path& path, const ModelSpec& expected);

enum class WeightSource { Trained, Rewound };

std::string_view to_string(WeightSource s);
WeightSource weight_source_from_string(std::string_view s);

struct TransferInit {
  Model model;
  Mask mask;
};

/// θ₂ = m₁ ⊙ θ₁ on the backbone (θ⁽ᴶ⁾ or θ⁽⁰⁾). The classifier layer is kept
/// with its mask when the class count matches, and otherwise re-initialized
/// dense from `head_seed`.
TransferInit instantiate_transfer(const Ticket& ticket, std::size_t target_num_classes, WeightSource source,
                                  std::uint64_t head_seed);

struct FineTuneResult {
  double accuracy_pct = 0.0;
  std::optional<double> baseline_pct;
  CycleStats stats;
};

/// Trains with the mask frozen and returns test accuracy. Every epoch checks
/// that pruned weights are still exactly zero. A budget of zero epochs
/// returns the accuracy of the initialization.
FineTuneResult fine_tune(Model& model, const Mask& mask, const data::Dataset& dataset, const TrainCycle& budget,
                         std::uint64_t seed, std::optional<double> baseline_pct = std::nullopt);

/// Throws Provenance naming the first masked-out weight that is nonzero.
void check_frozen(const ParamStore& params, const Mask& mask);

}  // namespace pclt
