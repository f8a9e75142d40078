#pragma once

// Exhaustive checks of the transition kernel on spaces small enough to
// enumerate: the dense MH transition matrix is built from the true sampling
// probabilities of every (action, position, content) triple, and compared
// against the Boltzmann distribution of the energy.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "factedit/mh_engine.hpp"

namespace factedit {

inline constexpr std::size_t kDefaultMaxKernelEntries = 10'000'000;

struct ToyStateSpace {
  std::vector<std::string> vocab;
  std::size_t min_len = 1;
  std::size_t max_len = 1;
  TokenSequence original;
  std::shared_ptr<const EvidenceSet> evidence;
  /// Every sequence over `vocab` with length in [min_len, max_len], shortest
  /// first, lexicographic within a length.
  std::vector<TokenSequence> states;

  static ToyStateSpace enumerate(std::vector<std::string> vocab, std::size_t min_len, std::size_t max_len,
                                 TokenSequence original, std::shared_ptr<const EvidenceSet> evidence);

  std::size_t size() const noexcept { return states.size(); }
  std::optional<std::size_t> index_of(const TokenSequence& seq) const;
  EditState state(std::size_t i) const;

 private:
  std::map<TokenSequence, std::size_t> index_;
};

/// Dense row-stochastic matrix, row-major.
struct TransitionKernelMatrix {
  std::size_t n = 0;
  std::vector<double> entries;

  double operator()(std::size_t from, std::size_t to) const { return entries[from * n + to]; }
  double& at(std::size_t from, std::size_t to) { return entries[from * n + to]; }
  std::span<const double> row(std::size_t i) const { return {entries.data() + i * n, n}; }
};

/// Exact kernel. T[x][x'] sums q(move) * A(move) over moves from x landing on
/// x', where q is the probability that the sampler draws the move. q is
/// derived from the sampling distributions here, not from the proposal's
/// forward log-probability, so a wrong forward or reverse term shows up as a
/// broken balance. Rejection mass goes to the diagonal.
/// Throws Error(SpaceTooLarge) when n^2 exceeds `max_entries`.
TransitionKernelMatrix build_exact_kernel(const ToyStateSpace& space, const Scorers& scorers,
                                          const SamplerConfig& config,
                                          std::size_t max_entries = kDefaultMaxKernelEntries);

std::vector<double> state_energies(const ToyStateSpace& space, const Scorers& scorers, const EnergyWeights& weights);

/// pi(x) proportional to exp(-E(x)), normalized by log-sum-exp.
std::vector<double> boltzmann(std::span<const double> energies);

/// max_x' | sum_x pi(x) T[x][x'] - pi(x') |.
double stationarity_residual(const TransitionKernelMatrix& t, std::span<const double> energies);

/// max over pairs of | pi(x) T[x][x'] - pi(x') T[x'][x] |.
double detailed_balance_violation(const TransitionKernelMatrix& t, std::span<const double> energies);

/// Largest deviation of a row sum from 1.
double row_sum_error(const TransitionKernelMatrix& t);
bool irreducible(const TransitionKernelMatrix& t);
bool aperiodic(const TransitionKernelMatrix& t);

/// Runs one chain of `n_steps` from the original claim, drops the first 10%,
/// and returns the total-variation distance of the visit histogram to pi.
double empirical_distribution_check(const ToyStateSpace& space, const Scorers& scorers, const SamplerConfig& config,
                                    std::size_t n_steps);

/// A toy space with the reference scorers it is checked under.
struct ToyProblem {
  std::string name;
  ToyStateSpace space;
  std::unique_ptr<FluencyModel> fluency;
  std::unique_ptr<Verifier> verifier;
  std::unique_ptr<SaliencyModel> saliency;
  std::unique_ptr<Proposer> proposer;
  SamplerConfig config;

  Scorers scorers() const { return {fluency.get(), verifier.get(), saliency.get(), proposer.get()}; }
};

/// "symmetric": vocab {b,c,d}, length 3, replacements only, uniform P1/P3.
/// "small":     vocab {b,c,d}, entity "b c", lengths 1-3 (39 states).
/// "full":      vocab {b,c,d,e}, entities "b c" and "d e", lengths 1-4.
/// "single":    vocab {b}, length 1.
std::vector<std::string> builtin_problem_names();
std::unique_ptr<ToyProblem> make_builtin_problem(std::string_view name,
                                                 KernelMutation mutation = KernelMutation::None);

struct SelfcheckLine {
  std::string space;
  std::string check;
  double value = 0.0;
  double tolerance = 0.0;
  /// True when passing means value > tolerance (mutation detection).
  bool expect_above = false;
  bool passed = false;
};

struct SelfcheckOptions {
  /// Restricts the run to one built-in space; empty runs all.
  std::string space;
  /// Applied to every kernel; with a mutation set, the report fails if the
  /// harness accepts the mutated kernel.
  KernelMutation mutation = KernelMutation::None;
  std::size_t empirical_steps = 100'000;
  std::uint64_t seed = 0;
  /// Also check that each mutation is detected.
  bool mutation_tests = true;
};

struct SelfcheckReport {
  std::vector<SelfcheckLine> lines;
  bool passed() const;
};

inline constexpr double kResidualTolerance = 1e-6;
inline constexpr double kSymmetricResidualTolerance = 1e-9;
inline constexpr double kBalanceTolerance = 1e-9;
inline constexpr double kRowSumTolerance = 1e-9;
inline constexpr double kTvTolerance = 0.05;
inline constexpr double kMutationThreshold = 1e-3;

SelfcheckReport run_selfcheck(const SelfcheckOptions& options);

}  // namespace factedit
