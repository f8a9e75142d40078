#include "factedit/oracle_harness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

#include "factedit/error.hpp"
#include "factedit/kernels.hpp"

namespace factedit {

ToyStateSpace ToyStateSpace::enumerate(std::vector<std::string> vocab, std::size_t min_len, std::size_t max_len,
                                       TokenSequence original, std::shared_ptr<const EvidenceSet> evidence) {
  if (vocab.empty() || min_len < 1 || max_len < min_len) throw Error(Errc::InvalidConfig, "bad toy space bounds");
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());

  ToyStateSpace s;
  s.vocab = vocab;
  s.min_len = min_len;
  s.max_len = max_len;
  s.original = std::move(original);
  s.evidence = evidence ? std::move(evidence) : std::make_shared<const EvidenceSet>();
  for (std::size_t len = min_len; len <= max_len; ++len) {
    std::vector<std::size_t> digits(len, 0);
    while (true) {
      std::vector<std::string> tokens;
      tokens.reserve(len);
      for (std::size_t d : digits) tokens.push_back(vocab[d]);
      s.states.emplace_back(std::move(tokens));
      std::size_t k = len;
      while (k > 0 && ++digits[k - 1] == vocab.size()) digits[--k] = 0;
      if (k == 0) break;
    }
  }
  for (std::size_t i = 0; i < s.states.size(); ++i) s.index_.emplace(s.states[i], i);
  if (!s.index_of(s.original)) throw Error(Errc::InvalidConfig, "original claim lies outside the toy space");
  return s;
}

std::optional<std::size_t> ToyStateSpace::index_of(const TokenSequence& seq) const {
  auto it = index_.find(seq);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EditState ToyStateSpace::state(std::size_t i) const {
  return EditState(states.at(i), std::make_shared<const TokenSequence>(original), evidence);
}

namespace {

KernelConfig bounded_kernel(const ToyStateSpace& space, const SamplerConfig& config) {
  KernelConfig k = config.kernel_config();
  k.min_tokens = std::max(k.min_tokens, space.min_len);
  k.max_tokens = k.max_tokens == 0 ? space.max_len : std::min(k.max_tokens, space.max_len);
  return k;
}

struct Move {
  EditAction action;
  double q = 0.0;
};

// Every move the sampler can draw from `view`, with the probability it is
// drawn: 1/3 for the action, P1 for the position, and the content
// probability of the branch actually sampled.
std::vector<Move> enumerate_moves(const StateView& view) {
  const KernelConfig& config = view.context().config;
  const auto& pos = view.positions();
  const auto& cands = view.candidates();
  const std::size_t units = view.state().unit_count();
  std::vector<Move> moves;

  for (std::size_t i = 0; i < units; ++i) {
    const double base = kActionProb * pos.unit_probs[i];
    if (config.allows(EditKind::Delete)) moves.push_back({EditAction{EditKind::Delete, i, std::nullopt, Space::Token}, base});
    if (!config.allows(EditKind::Replace)) continue;
    if (view.state().segmentation()[i].is_entity()) {
      const auto& probs = view.entity_probs(i, i + 1);
      for (std::size_t c = 0; c < cands.size(); ++c) {
        moves.push_back({EditAction{EditKind::Replace, i, cands[c], Space::Entity}, base * probs[c]});
      }
    } else {
      const auto& dist = view.token_dist(i, i + 1);
      for (std::size_t t = 0; t < dist.tokens.size(); ++t) {
        moves.push_back({EditAction{EditKind::Replace, i, TokenSequence{dist.tokens[t]}, Space::Token},
                         base * dist.probs[t]});
      }
    }
  }

  if (config.allows(EditKind::Insert)) {
    const double entity_branch = cands.empty() ? 0.0 : config.alpha;
    for (std::size_t g = 0; g <= units; ++g) {
      const double base = kActionProb * pos.gap_probs[g];
      if (entity_branch > 0.0) {
        const auto& probs = view.entity_probs(g, g);
        for (std::size_t c = 0; c < cands.size(); ++c) {
          moves.push_back({EditAction{EditKind::Insert, g, cands[c], Space::Entity}, base * entity_branch * probs[c]});
        }
      }
      if (entity_branch < 1.0) {
        const auto& dist = view.token_dist(g, g);
        for (std::size_t t = 0; t < dist.tokens.size(); ++t) {
          moves.push_back({EditAction{EditKind::Insert, g, TokenSequence{dist.tokens[t]}, Space::Token},
                           base * (1.0 - entity_branch) * dist.probs[t]});
        }
      }
    }
  }
  return moves;
}

}  // namespace

std::vector<double> state_energies(const ToyStateSpace& space, const Scorers& scorers, const EnergyWeights& weights) {
  std::vector<double> e;
  e.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    e.push_back(total_energy(space.state(i), *scorers.fluency, *scorers.verifier, weights).total);
  }
  return e;
}

TransitionKernelMatrix build_exact_kernel(const ToyStateSpace& space, const Scorers& scorers,
                                          const SamplerConfig& config, std::size_t max_entries) {
  const std::size_t n = space.size();
  if (n > 0 && n > max_entries / n) {
    throw Error(Errc::SpaceTooLarge, std::to_string(n) + " states exceed the dense kernel bound");
  }
  const KernelContext ctx{scorers.saliency, scorers.proposer, bounded_kernel(space, config)};

  std::vector<EnergyBreakdown> energies;
  energies.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    energies.push_back(total_energy(space.state(i), *scorers.fluency, *scorers.verifier, config.weights));
  }

  TransitionKernelMatrix t;
  t.n = n;
  t.entries.assign(n * n, 0.0);
  for (std::size_t from = 0; from < n; ++from) {
    const StateView view(space.state(from), ctx);
    for (const Move& m : enumerate_moves(view)) {
      if (m.q <= 0.0) continue;
      const Proposal p = make_proposal(view, m.action);
      if (!p.ok()) continue;
      const auto to = space.index_of(p.new_state->current());
      if (!to) throw Error(Errc::InvalidAction, "kernel left the toy space: " + p.new_state->current().text());
      t.at(from, *to) += m.q * acceptance_ratio(energies[from], energies[*to], p.forward_logprob, p.reverse_logprob);
    }
    double off = 0.0;
    for (std::size_t to = 0; to < n; ++to) {
      if (to != from) off += t(from, to);
    }
    t.at(from, from) = 1.0 - off;
  }
  return t;
}

std::vector<double> boltzmann(std::span<const double> energies) {
  std::vector<double> pi(energies.size());
  if (pi.empty()) return pi;
  double lowest = energies[0];
  for (double e : energies) lowest = std::min(lowest, e);
  for (std::size_t i = 0; i < pi.size(); ++i) pi[i] = std::exp(lowest - energies[i]);
  kernels::scale(pi, 1.0 / kernels::sum(pi));
  return pi;
}

double stationarity_residual(const TransitionKernelMatrix& t, std::span<const double> energies) {
  const auto pi = boltzmann(energies);
  std::vector<double> next(t.n, 0.0);
  for (std::size_t x = 0; x < t.n; ++x) kernels::axpy(pi[x], t.row(x), next);
  return kernels::max_abs_diff(next, pi);
}

double detailed_balance_violation(const TransitionKernelMatrix& t, std::span<const double> energies) {
  const auto pi = boltzmann(energies);
  double worst = 0.0;
  for (std::size_t x = 0; x < t.n; ++x) {
    for (std::size_t y = x + 1; y < t.n; ++y) worst = std::max(worst, std::abs(pi[x] * t(x, y) - pi[y] * t(y, x)));
  }
  return worst;
}

double row_sum_error(const TransitionKernelMatrix& t) {
  double worst = 0.0;
  for (std::size_t x = 0; x < t.n; ++x) {
    const auto row = t.row(x);
    worst = std::max(worst, std::abs(kernels::sum(row) - 1.0));
    for (double v : row) {
      if (v < 0.0) worst = std::max(worst, -v);
    }
  }
  return worst;
}

bool irreducible(const TransitionKernelMatrix& t) {
  if (t.n == 0) return true;
  auto reach_all = [&](bool transpose) {
    std::vector<bool> seen(t.n, false);
    std::deque<std::size_t> queue{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!queue.empty()) {
      const std::size_t x = queue.front();
      queue.pop_front();
      for (std::size_t y = 0; y < t.n; ++y) {
        const double w = transpose ? t(y, x) : t(x, y);
        if (w > 0.0 && !seen[y]) {
          seen[y] = true;
          ++count;
          queue.push_back(y);
        }
      }
    }
    return count == t.n;
  };
  return reach_all(false) && reach_all(true);
}

bool aperiodic(const TransitionKernelMatrix& t) {
  for (std::size_t x = 0; x < t.n; ++x) {
    if (!(t(x, x) > 0.0)) return false;
  }
  return true;
}

double empirical_distribution_check(const ToyStateSpace& space, const Scorers& scorers, const SamplerConfig& config,
                                    std::size_t n_steps) {
  const std::size_t n = space.size();
  if (n == 0) return 0.0;
  SamplerConfig cfg = config;
  cfg.kernel = bounded_kernel(space, config);
  const KernelContext ctx{scorers.saliency, scorers.proposer, cfg.kernel_config()};

  std::vector<EnergyBreakdown> energies;
  energies.reserve(n);
  std::vector<double> totals;
  for (std::size_t i = 0; i < n; ++i) {
    energies.push_back(total_energy(space.state(i), *scorers.fluency, *scorers.verifier, cfg.weights));
    totals.push_back(energies.back().total);
  }
  std::vector<std::unique_ptr<StateView>> views(n);
  auto view_of = [&](std::size_t i) -> const StateView& {
    if (!views[i]) views[i] = std::make_unique<StateView>(space.state(i), ctx);
    return *views[i];
  };

  Rng rng(cfg.seed);
  std::size_t current = *space.index_of(space.original);
  const std::size_t burn_in = n_steps / 10;
  std::vector<double> visits(n, 0.0);
  for (std::size_t s = 0; s < n_steps; ++s) {
    StepResult r = step(view_of(current), energies[current], scorers, cfg, rng, s + 1);
    if (r.record.accepted) {
      const auto next = space.index_of(r.state.current());
      if (!next) throw Error(Errc::InvalidAction, "chain left the toy space");
      current = *next;
    }
    if (s >= burn_in) visits[current] += 1.0;
  }
  kernels::scale(visits, 1.0 / static_cast<double>(n_steps - burn_in));
  return 0.5 * kernels::abs_diff_sum(visits, boltzmann(totals));
}

// ---------------------------------------------------------------------------
// Built-in problems

namespace {

std::vector<TokenSequence> lines_of(std::initializer_list<std::string_view> texts) {
  std::vector<TokenSequence> out;
  for (auto t : texts) out.push_back(TokenSequence::tokenize(t));
  return out;
}

struct ProblemSpec {
  std::vector<std::string> vocab;
  std::size_t min_len, max_len;
  std::string_view original;
  std::vector<TokenSequence> corpus;
  std::vector<TokenSequence> passages;
  std::vector<TokenSequence> entities;
  bool uniform = false;
  std::array<bool, 3> enabled{true, true, true};
};

}  // namespace

std::vector<std::string> builtin_problem_names() { return {"symmetric", "small", "full", "single"}; }

std::unique_ptr<ToyProblem> make_builtin_problem(std::string_view name, KernelMutation mutation) {
  ProblemSpec def;
  if (name == "symmetric") {
    def = {{"b", "c", "d"}, 3, 3, "b c d", lines_of({"b c d", "b c b"}), lines_of({"b c"}), {}, true,
            {false, false, true}};
  } else if (name == "small") {
    def = {{"b", "c", "d"}, 1, 3, "b c d", lines_of({"b c d", "d b c"}), lines_of({"b c"}), lines_of({"b c"})};
  } else if (name == "full") {
    def = {{"b", "c", "d", "e"}, 1, 4, "b c d e", lines_of({"b c d e", "d e b c"}), lines_of({"b c e"}),
            lines_of({"b c", "d e"})};
  } else if (name == "single") {
    def = {{"b"}, 1, 1, "b", lines_of({"b"}), lines_of({"b"}), {}};
  } else {
    throw Error(Errc::InvalidConfig, "unknown toy space '" + std::string(name) + "'");
  }

  auto p = std::make_unique<ToyProblem>();
  p->name = std::string(name);
  auto evidence = std::make_shared<const EvidenceSet>(def.passages, Gazetteer(def.entities));
  p->space = ToyStateSpace::enumerate(def.vocab, def.min_len, def.max_len, TokenSequence::tokenize(def.original),
                                      evidence);

  std::vector<TokenSequence> vocab_seq;
  for (const auto& v : def.vocab) vocab_seq.push_back(TokenSequence{v});
  auto lm = std::make_unique<NGramMLM>(NGramMLM::train(def.corpus, vocab_seq, {}));
  p->verifier = std::make_unique<LexicalVerifier>();
  if (def.uniform) {
    p->saliency = std::make_unique<UniformSaliency>();
    p->proposer = std::make_unique<UniformProposer>(def.vocab);
  } else {
    p->saliency = std::make_unique<OcclusionSaliency>(*p->verifier);
    p->proposer = std::make_unique<NGramProposer>(*lm);
  }
  p->fluency = std::move(lm);
  p->config.kernel.enabled = def.enabled;
  p->config.kernel.mutation = mutation;
  return p;
}

// ---------------------------------------------------------------------------
// Selfcheck

bool SelfcheckReport::passed() const {
  return std::all_of(lines.begin(), lines.end(), [](const SelfcheckLine& l) { return l.passed; });
}

namespace {

SelfcheckLine check_line(std::string space, std::string check, double value, double tolerance,
                         bool expect_above = false) {
  SelfcheckLine l{std::move(space), std::move(check), value, tolerance, expect_above, false};
  l.passed = expect_above ? value > tolerance : value <= tolerance;
  return l;
}

}  // namespace

SelfcheckReport run_selfcheck(const SelfcheckOptions& options) {
  SelfcheckReport report;
  std::vector<std::string> names = builtin_problem_names();
  if (!options.space.empty()) {
    if (std::find(names.begin(), names.end(), options.space) == names.end()) {
      throw Error(Errc::InvalidConfig, "unknown toy space '" + options.space + "'");
    }
    names = {options.space};
  }

  for (const auto& name : names) {
    auto p = make_builtin_problem(name, options.mutation);
    p->config.seed = options.seed;
    const auto t = build_exact_kernel(p->space, p->scorers(), p->config);
    const auto e = state_energies(p->space, p->scorers(), p->config.weights);
    const double tol = name == "symmetric" ? kSymmetricResidualTolerance : kResidualTolerance;
    report.lines.push_back(check_line(name, "row-sum", row_sum_error(t), kRowSumTolerance));
    report.lines.push_back(check_line(name, "stationarity-residual", stationarity_residual(t, e), tol));
    report.lines.push_back(check_line(name, "detailed-balance", detailed_balance_violation(t, e), kBalanceTolerance));
    report.lines.push_back(check_line(name, "irreducible", irreducible(t) ? 0.0 : 1.0, 0.0));
    report.lines.push_back(check_line(name, "aperiodic", aperiodic(t) ? 0.0 : 1.0, 0.0));
    if (p->space.size() <= 40) {
      const double tv = empirical_distribution_check(p->space, p->scorers(), p->config, options.empirical_steps);
      report.lines.push_back(check_line(name, "empirical-tv", tv, kTvTolerance));
    }
  }

  if (options.mutation_tests && options.mutation == KernelMutation::None) {
    for (const auto& name : names) {
      // Residuals are absolute, so they shrink as pi spreads over more
      // states; mutants are judged on the space the empirical check uses.
      if (name != "small") continue;
      for (auto m : {KernelMutation::CorruptReverse, KernelMutation::DropAlpha,
                     KernelMutation::StaleReversePosition}) {
        auto p = make_builtin_problem(name, m);
        const auto t = build_exact_kernel(p->space, p->scorers(), p->config);
        const auto e = state_energies(p->space, p->scorers(), p->config.weights);
        report.lines.push_back(check_line(name, "mutation:" + std::string(to_string(m)), stationarity_residual(t, e),
                                          kMutationThreshold, true));
      }
    }
  }
  return report;
}

}  // namespace factedit
