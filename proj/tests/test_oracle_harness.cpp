#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "factedit/error.hpp"
#include "factedit/oracle_harness.hpp"

using namespace factedit;

namespace {

// -pseudo_loglik is 1 for "b" and 2 for anything else.
struct TwoLevelFluency final : FluencyModel {
  double pseudo_loglik(const TokenSequence& seq) const override { return seq == TokenSequence{"b"} ? -1.0 : -2.0; }
};

struct FixedVerifier final : Verifier {
  double support_prob(const TokenSequence&, const EvidenceSet&) const override { return 0.5; }
};

// pi T computed directly, without the harness helpers.
double dense_residual(const TransitionKernelMatrix& t, const std::vector<double>& energies) {
  const double top = -*std::min_element(energies.begin(), energies.end());
  std::vector<double> pi(energies.size());
  for (std::size_t i = 0; i < pi.size(); ++i) pi[i] = std::exp(-energies[i] - top);
  const double z = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& p : pi) p /= z;
  double worst = 0.0;
  for (std::size_t j = 0; j < t.n; ++j) {
    double flow = 0.0;
    for (std::size_t i = 0; i < t.n; ++i) flow += pi[i] * t(i, j);
    worst = std::max(worst, std::fabs(flow - pi[j]));
  }
  return worst;
}

}  // namespace

TEST_CASE("built-in kernels are row-stochastic and non-negative") {
  for (const auto& name : builtin_problem_names()) {
    CAPTURE(name);
    const auto p = make_builtin_problem(name);
    const auto t = build_exact_kernel(p->space, p->scorers(), p->config);
    REQUIRE(t.n == p->space.size());
    CHECK(row_sum_error(t) <= kRowSumTolerance);
    for (double v : t.entries) CHECK(v >= 0.0);
    CHECK(irreducible(t));
    CHECK(aperiodic(t));
  }
}

TEST_CASE("space sizes") {
  CHECK(make_builtin_problem("symmetric")->space.size() == 27);
  CHECK(make_builtin_problem("small")->space.size() == 39);
  CHECK(make_builtin_problem("full")->space.size() == 340);
  CHECK(make_builtin_problem("single")->space.size() == 1);
  CHECK_THROWS_AS(make_builtin_problem("nope"), Error);
}

TEST_CASE("two-state slice matches hand-multiplied factors") {
  const auto ev = std::make_shared<const EvidenceSet>();
  const auto space = ToyStateSpace::enumerate({"b", "c"}, 1, 1, TokenSequence{"b"}, ev);
  REQUIRE(space.size() == 2);
  const TwoLevelFluency lm;
  const FixedVerifier v;
  const UniformSaliency sal;
  const UniformProposer prop({"b", "c"});
  const Scorers scorers{&lm, &v, &sal, &prop};
  SamplerConfig config;
  const auto t = build_exact_kernel(space, scorers, config);
  // Length-1 states: insertions exceed the bound, deletions would empty the
  // claim, so only replacement moves. P1 = 1, P2 = 1/3, P3 = 1/2.
  // E(c) - E(b) = 1 (fluency) + 1 (Hamming to the original "b").
  const double g = 1.0 * (1.0 / 3.0) * 0.5;
  CHECK(t(0, 1) == doctest::Approx(g * std::exp(-2.0)).epsilon(1e-14));
  CHECK(t(1, 0) == doctest::Approx(g).epsilon(1e-14));
  CHECK(t(0, 0) == doctest::Approx(1.0 - g * std::exp(-2.0)).epsilon(1e-14));
  CHECK(t(1, 1) == doctest::Approx(1.0 - g).epsilon(1e-14));
  const auto e = state_energies(space, scorers, config.weights);
  CHECK(detailed_balance_violation(t, e) <= 1e-15);
}

TEST_CASE("boltzmann normalization") {
  const std::vector<double> e = {0.0, std::log(3.0)};
  const auto pi = boltzmann(e);
  CHECK(pi[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(pi[1] == doctest::Approx(0.25).epsilon(1e-15));
  const std::vector<double> far = {1000.0, 1001.0};
  const auto q = boltzmann(far);
  CHECK(q[0] + q[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("stationarity and detailed balance of the correct kernel") {
  for (const auto& name : builtin_problem_names()) {
    CAPTURE(name);
    const auto p = make_builtin_problem(name);
    const auto t = build_exact_kernel(p->space, p->scorers(), p->config);
    const auto e = state_energies(p->space, p->scorers(), p->config.weights);
    const double residual = stationarity_residual(t, e);
    CHECK(residual == doctest::Approx(dense_residual(t, e)).epsilon(1e-6).scale(1e-15));
    CHECK(residual <= (name == "symmetric" ? kSymmetricResidualTolerance : kResidualTolerance));
    CHECK(detailed_balance_violation(t, e) <= kBalanceTolerance);
  }
}

TEST_CASE("every mutation is detected") {
  for (auto m : {KernelMutation::CorruptReverse, KernelMutation::DropAlpha, KernelMutation::StaleReversePosition}) {
    CAPTURE(to_string(m));
    const auto p = make_builtin_problem("small", m);
    const auto t = build_exact_kernel(p->space, p->scorers(), p->config);
    const auto e = state_energies(p->space, p->scorers(), p->config.weights);
    CHECK(row_sum_error(t) <= kRowSumTolerance);
    CHECK(dense_residual(t, e) > kMutationThreshold);
  }
}

TEST_CASE("empirical distribution converges") {
  const auto p = make_builtin_problem("small");
  SamplerConfig config = p->config;
  config.seed = 1;
  CHECK(empirical_distribution_check(p->space, p->scorers(), config, 100000) <= kTvTolerance);

  double short_tv = 0.0, long_tv = 0.0;
  int short_worse = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    config.seed = seed;
    const double a = empirical_distribution_check(p->space, p->scorers(), config, 1000);
    const double b = empirical_distribution_check(p->space, p->scorers(), config, 100000);
    short_tv += a;
    long_tv += b;
    if (a > b) ++short_worse;
  }
  MESSAGE("mean TV over 20 seeds: 1e3 steps " << short_tv / 20 << ", 1e5 steps " << long_tv / 20);
  CHECK(short_tv > long_tv);
  CHECK(short_worse >= 15);

  const auto single = make_builtin_problem("single");
  CHECK(empirical_distribution_check(single->space, single->scorers(), single->config, 10000) == 0.0);
}

TEST_CASE("oversized spaces are refused") {
  const auto p = make_builtin_problem("small");
  try {
    build_exact_kernel(p->space, p->scorers(), p->config, 100);
    FAIL("expected SpaceTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SpaceTooLarge);
  }
}

TEST_CASE("selfcheck report") {
  SelfcheckOptions opts;
  opts.empirical_steps = 100000;
  const auto report = run_selfcheck(opts);
  CHECK(report.passed());
  for (const auto& line : report.lines) {
    CAPTURE(line.space);
    CAPTURE(line.check);
    CHECK(line.passed);
  }

  SelfcheckOptions mutated;
  mutated.space = "small";
  mutated.mutation = KernelMutation::CorruptReverse;
  CHECK_FALSE(run_selfcheck(mutated).passed());

  SelfcheckOptions single;
  single.space = "single";
  const auto r = run_selfcheck(single);
  bool saw_tv = false;
  for (const auto& line : r.lines) {
    if (line.check == "empirical-tv") {
      saw_tv = true;
      CHECK(line.value == 0.0);
    }
  }
  CHECK(saw_tv);
}
