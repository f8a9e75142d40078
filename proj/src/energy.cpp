#include "factedit/energy.hpp"

#include <algorithm>
#include <cmath>

#include "factedit/error.hpp"

namespace factedit {

void EnergyWeights::validate() const {
  if (!(lm >= 0.0 && v >= 0.0 && h >= 0.0)) throw Error(Errc::InvalidConfig, "energy weights must be non-negative");
  if (lm == 0.0 && v == 0.0 && h == 0.0) throw Error(Errc::InvalidConfig, "at least one energy weight must be positive");
}

std::size_t hamming(const TokenSequence& x, const TokenSequence& x0) {
  const std::size_t common = std::min(x.size(), x0.size());
  std::size_t d = 0;
  for (std::size_t i = 0; i < common; ++i) d += x[i] != x0[i] ? 1 : 0;
  return d + (std::max(x.size(), x0.size()) - common);
}

EnergyBreakdown combine_energy(double lm, double v, double h, const EnergyWeights& w) {
  EnergyBreakdown e{lm, v, h, 0.0};
  e.total = w.lm * lm + w.v * v + w.h * h;
  return e;
}

EnergyBreakdown total_energy(const EditState& state, const FluencyModel& fluency, const Verifier& verifier,
                             const EnergyWeights& weights) {
  const double lm = -fluency.pseudo_loglik(state.current());
  const double v = -std::log(verifier.support_prob(state.current(), state.evidence()));
  const double h = static_cast<double>(hamming(state.current(), state.original()));
  return combine_energy(lm, v, h, weights);
}

double pi_ratio(const EnergyBreakdown& e_new, const EnergyBreakdown& e_old) {
  return std::exp(std::clamp(e_old.total - e_new.total, -kMaxExponent, kMaxExponent));
}

}  // namespace factedit
