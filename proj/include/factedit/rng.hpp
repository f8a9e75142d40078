#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace factedit {

/// Chain random source: std::mt19937_64 (whose output sequence the standard
/// fixes) with a portable 53-bit uniform conversion. Independent streams are
/// derived with SplitMix64 so traces reproduce across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Seed of the stream named `key` under `seed`.
  static std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);
  static std::uint64_t splitmix64(std::uint64_t x);

 private:
  std::mt19937_64 engine_;
};

/// First index whose cumulative mass exceeds u * total. Zero-mass entries are
/// never selected.
std::size_t sample_index(std::span<const double> probs, double u);

}  // namespace factedit
