#include "pclt/error.hpp"

namespace pclt {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::Label: return "label";
    case ErrorKind::GraphConsumed: return "graph-consumed";
    case ErrorKind::UninitializedGrad: return "uninitialized-grad";
    case ErrorKind::Spec: return "spec";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::NothingToPrune: return "nothing-to-prune";
    case ErrorKind::Scope: return "scope";
    case ErrorKind::DegeneratePrune: return "degenerate-prune";
    case ErrorKind::Staleness: return "staleness";
    case ErrorKind::Provenance: return "provenance";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Corruption: return "corruption";
    case ErrorKind::Version: return "version";
    case ErrorKind::SpecMismatch: return "spec-mismatch";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::DegenerateCloud: return "degenerate-cloud";
    case ErrorKind::Config: return "config";
    case ErrorKind::Path: return "path";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace pclt
