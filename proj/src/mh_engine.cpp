#include "factedit/mh_engine.hpp"

#include <algorithm>
#include <cmath>

#include "factedit/error.hpp"

namespace factedit {

void SamplerConfig::validate() const {
  if (iterations < 1) throw Error(Errc::InvalidConfig, "iterations must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::InvalidConfig, "alpha must lie in [0, 1]");
  weights.validate();
  if (kernel.min_tokens < 1) throw Error(Errc::InvalidConfig, "min_tokens must be >= 1");
}

KernelConfig SamplerConfig::kernel_config() const {
  KernelConfig k = kernel;
  k.alpha = alpha;
  return k;
}

double acceptance_ratio(const EnergyBreakdown& e_old, const EnergyBreakdown& e_new, double forward_logprob,
                        double reverse_logprob) {
  if (!std::isfinite(forward_logprob) || !std::isfinite(reverse_logprob)) return 0.0;
  const double log_a = (e_old.total - e_new.total) + (reverse_logprob - forward_logprob);
  if (std::isnan(log_a)) return 0.0;
  return std::min(1.0, std::exp(std::clamp(log_a, -kMaxExponent, kMaxExponent)));
}

StepResult step(const StateView& view, const EnergyBreakdown& energy, const Scorers& scorers,
                const SamplerConfig& config, Rng& rng, std::size_t iteration) {
  TraceRecord rec;
  rec.iteration = iteration;
  for (double& d : rec.draws) d = rng.uniform();
  rec.u = rec.draws[kDrawAccept];
  rec.e_old = energy;

  const ProposalDraws draws{rec.draws[kDrawAction], rec.draws[kDrawPosition], rec.draws[kDrawBranch],
                            rec.draws[kDrawContent]};
  Proposal p = propose(view, draws);
  rec.action = p.action;
  rec.status = p.status;
  rec.forward_logprob = p.forward_logprob;
  rec.reverse_logprob = p.reverse_logprob;

  if (!p.ok()) return StepResult{view.state(), energy, std::move(rec)};

  const EnergyBreakdown e_new = total_energy(*p.new_state, *scorers.fluency, *scorers.verifier, config.weights);
  rec.proposal = p.new_state->current();
  rec.e_new = e_new;
  rec.acceptance = acceptance_ratio(energy, e_new, p.forward_logprob, p.reverse_logprob);
  rec.accepted = rec.u < rec.acceptance;
  if (!rec.accepted) return StepResult{view.state(), energy, std::move(rec)};
  return StepResult{std::move(*p.new_state), e_new, std::move(rec)};
}

CorrectionResult run(const TokenSequence& claim, std::shared_ptr<const EvidenceSet> evidence, const Scorers& scorers,
                     const SamplerConfig& config) {
  config.validate();
  if (claim.empty()) throw Error(Errc::InvalidAction, "claim must be non-empty");
  if (!scorers.fluency || !scorers.verifier || !scorers.saliency || !scorers.proposer) {
    throw Error(Errc::InvalidConfig, "all scorers must be set");
  }

  const KernelContext ctx{scorers.saliency, scorers.proposer, config.kernel_config()};
  Rng rng(config.seed);

  EditState state = EditState::initial(claim, std::move(evidence));
  EnergyBreakdown energy = total_energy(state, *scorers.fluency, *scorers.verifier, config.weights);

  CorrectionResult result;
  result.initial_energy = energy;
  result.trace.reserve(config.iterations);
  std::optional<StateView> view;
  view.emplace(state, ctx);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    StepResult s = step(*view, energy, scorers, config, rng, it);
    const bool accepted = s.record.accepted;
    result.trace.push_back(std::move(s.record));
    if (!accepted) continue;
    ++result.accepted_count;
    result.accepted_states.push_back(AcceptedState{it, s.state.current(), s.energy});
    energy = s.energy;
    view.emplace(std::move(s.state), ctx);
  }
  result.iterations_run = config.iterations;

  const AcceptedState best = best_within(result, config.iterations, claim, config.include_initial_in_ranking);
  result.best = best.text;
  result.best_energy = best.energy;
  return result;
}

AcceptedState best_within(const CorrectionResult& result, std::size_t k, const TokenSequence& initial,
                          bool include_initial) {
  std::optional<AcceptedState> best;
  if (include_initial) best = AcceptedState{0, initial, result.initial_energy};
  for (const auto& a : result.accepted_states) {
    if (a.iteration > k) break;
    if (!best || a.energy.total < best->energy.total) best = a;
  }
  // Nothing accepted and the claim excluded: the chain never left x0.
  if (!best) return AcceptedState{0, initial, result.initial_energy};
  return *best;
}

}  // namespace factedit
