#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace pclt {

/// SplitMix64 finalizer. Used to derive independent stream seeds from tuples
/// such as (base seed, class, sample index).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a) noexcept {
  return mix64(mix64(base) ^ (a + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept {
  return derive_seed(derive_seed(base, a), b);
}

/// Deterministic random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the distribution transforms are written
/// here because the std:: distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (one value per call; the pair partner is dropped
  /// so the stream position depends only on the number of calls).
  double normal();

  std::string state() const;
  void restore(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// FNV-1a 64-bit, streaming.
class Fnv1a {
 public:
  void update(std::span<const std::uint8_t> bytes) noexcept {
    for (auto b : bytes) {
      hash_ ^= b;
      hash_ *= 0x100000001b3ULL;
    }
  }
  void update(const void* data, std::size_t size) noexcept {
    update(std::span<const std::uint8_t>(static_cast<const std::uint8_t*>(data), size));
  }
  template <class T>
  void update_value(const T& v) noexcept {
    update(&v, sizeof(T));
  }
  std::uint64_t digest() const noexcept { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace pclt
