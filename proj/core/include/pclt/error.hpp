#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pclt {

enum class ErrorKind {
  Dimension,
  EmptyInput,
  Label,
  GraphConsumed,
  UninitializedGrad,
  Spec,
  Shape,
  Parameter,
  NothingToPrune,
  Scope,
  DegeneratePrune,
  Staleness,
  Provenance,
  Divergence,
  Corruption,
  Version,
  SpecMismatch,
  Parse,
  DegenerateCloud,
  Config,
  Path,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pclt
