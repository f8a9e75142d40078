#pragma once

#include <cstddef>

#include "factedit/scorers.hpp"
#include "factedit/text_state.hpp"

namespace factedit {

/// Non-negative term weights; the unweighted sum is (1, 1, 1).
struct EnergyWeights {
  double lm = 1.0;
  double v = 1.0;
  double h = 1.0;

  /// Throws Error(InvalidConfig) on negative or all-zero weights.
  void validate() const;
};

struct EnergyBreakdown {
  double lm = 0.0;
  double v = 0.0;
  double h = 0.0;
  double total = 0.0;

  friend bool operator==(const EnergyBreakdown&, const EnergyBreakdown&) = default;
};

/// Positional mismatches over the common prefix length plus the absolute
/// length difference.
std::size_t hamming(const TokenSequence& x, const TokenSequence& x0);

EnergyBreakdown combine_energy(double lm, double v, double h, const EnergyWeights& w);

/// lm = -pseudo_loglik(x), v = -log P_V(x, E), h = hamming(x, x0).
EnergyBreakdown total_energy(const EditState& state, const FluencyModel& fluency, const Verifier& verifier,
                             const EnergyWeights& weights);

inline constexpr double kMaxExponent = 700.0;

/// exp(old.total - new.total), exponent clamped to [-700, 700].
double pi_ratio(const EnergyBreakdown& e_new, const EnergyBreakdown& e_old);

}  // namespace factedit
