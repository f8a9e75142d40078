#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "factedit/energy.hpp"
#include "factedit/proposal.hpp"
#include "factedit/rng.hpp"
#include "factedit/scorers.hpp"
#include "factedit/text_state.hpp"

namespace factedit {

/// Borrowed scorer handles; all must outlive the run.
struct Scorers {
  const FluencyModel* fluency = nullptr;
  const Verifier* verifier = nullptr;
  const SaliencyModel* saliency = nullptr;
  const Proposer* proposer = nullptr;
};

struct SamplerConfig {
  std::size_t iterations = 20;
  std::uint64_t seed = 0;
  double alpha = 0.5;
  EnergyWeights weights{};
  bool include_initial_in_ranking = true;
  /// Length bounds, disabled actions and test mutations. Its alpha is
  /// overwritten by `alpha` above.
  KernelConfig kernel{};

  /// Throws Error(InvalidConfig).
  void validate() const;
  KernelConfig kernel_config() const;
};

/// Uniform draws per step, in consumption order.
enum Draw : std::size_t { kDrawAction, kDrawPosition, kDrawBranch, kDrawContent, kDrawAccept, kDrawCount };

struct TraceRecord {
  std::size_t iteration = 0;
  EditAction action;
  ProposalStatus status = ProposalStatus::Ok;
  /// Proposed sequence; empty when the proposal was rejected before scoring.
  std::optional<TokenSequence> proposal;
  EnergyBreakdown e_old;
  std::optional<EnergyBreakdown> e_new;
  double forward_logprob = 0.0;
  double reverse_logprob = 0.0;
  double acceptance = 0.0;
  double u = 0.0;
  bool accepted = false;
  std::array<double, kDrawCount> draws{};
};

struct AcceptedState {
  std::size_t iteration = 0;
  TokenSequence text;
  EnergyBreakdown energy;
};

struct CorrectionResult {
  TokenSequence best;
  EnergyBreakdown best_energy;
  EnergyBreakdown initial_energy;
  std::vector<TraceRecord> trace;
  std::vector<AcceptedState> accepted_states;
  std::size_t iterations_run = 0;
  std::size_t accepted_count = 0;
};

/// min(1, exp((e_old - e_new) + (reverse - forward))), exponent clamped to
/// [-700, 700]. 0 if either log-probability is -inf.
double acceptance_ratio(const EnergyBreakdown& e_old, const EnergyBreakdown& e_new, double forward_logprob,
                        double reverse_logprob);

struct StepResult {
  EditState state;
  EnergyBreakdown energy;
  TraceRecord record;
};

/// One propose/accept cycle from `view` with current energy `energy`.
/// Consumes exactly kDrawCount uniforms from `rng`.
StepResult step(const StateView& view, const EnergyBreakdown& energy, const Scorers& scorers,
                const SamplerConfig& config, Rng& rng, std::size_t iteration);

/// Runs config.iterations steps from the claim. The rng is seeded with
/// config.seed.
CorrectionResult run(const TokenSequence& claim, std::shared_ptr<const EvidenceSet> evidence, const Scorers& scorers,
                     const SamplerConfig& config);

/// Lowest-energy state accepted at iterations 1..k (plus the initial claim
/// when `include_initial`). Ties go to the earliest.
AcceptedState best_within(const CorrectionResult& result, std::size_t k, const TokenSequence& initial,
                          bool include_initial = true);

}  // namespace factedit
