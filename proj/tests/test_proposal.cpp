#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "factedit/error.hpp"
#include "factedit/proposal.hpp"
#include "factedit/rng.hpp"

using namespace factedit;

namespace {

struct FixedSaliency final : SaliencyModel {
  std::vector<double> values;
  std::vector<double> token_saliency(const TokenSequence& seq, const EvidenceSet&) const override {
    if (values.size() == seq.size()) return values;
    return std::vector<double>(seq.size(), 1.0);
  }
};

// Token distribution {x: 0.2, y: 0.8} everywhere; entity scores taken from a table.
struct FixedProposer final : Proposer {
  std::vector<double> entity_table;
  TokenDistribution token_dist(const MaskedSequence&, const EvidenceSet&) const override {
    return TokenDistribution{{"x", "y"}, {0.2, 0.8}};
  }
  std::vector<double> entity_scores(const MaskedSequence&, const EvidenceSet&,
                                    std::span<const TokenSequence> candidates) const override {
    std::vector<double> out(candidates.size(), 0.0);
    for (std::size_t i = 0; i < out.size() && i < entity_table.size(); ++i) out[i] = entity_table[i];
    return out;
  }
};

std::shared_ptr<const EvidenceSet> evidence_with(const std::vector<TokenSequence>& entities,
                                                 const std::vector<TokenSequence>& passages = {}) {
  return std::make_shared<const EvidenceSet>(passages, Gazetteer(entities));
}

}  // namespace

TEST_CASE("position distribution examples") {
  const Segmentation four = segment(TokenSequence{"a", "b", "c", "d"}, Gazetteer{});
  const std::vector<double> ones = {1, 1, 1, 1};
  const auto p = position_distribution(four, ones);
  for (double u : p.unit_probs) CHECK(u == doctest::Approx(0.25).epsilon(1e-12));
  REQUIRE(p.gap_probs.size() == 5);
  for (double g : p.gap_probs) CHECK(g == doctest::Approx(0.2).epsilon(1e-12));

  // Token probabilities (0.1, 0.2, 0.3, 0.4) before smoothing; the smoothing
  // floor shifts each by at most 1e-3.
  const Segmentation grouped =
      segment(TokenSequence{"a", "b", "c", "d"}, Gazetteer({TokenSequence{"b", "c"}}));
  const std::vector<double> graded = {0.1, 0.2, 0.3, 0.4};
  const auto q = position_distribution(grouped, graded);
  REQUIRE(q.unit_probs.size() == 3);
  CHECK(q.unit_probs[0] == doctest::Approx(0.1).epsilon(1e-2));
  CHECK(q.unit_probs[1] == doctest::Approx(0.5).epsilon(1e-2));
  CHECK(q.unit_probs[2] == doctest::Approx(0.4).epsilon(1e-2));
  // Exact: eps = 1e-3, total 1.004.
  CHECK(q.unit_probs[1] == doctest::Approx((0.5 + 2e-3) / 1.004).epsilon(1e-12));

  const Segmentation two = segment(TokenSequence{"a", "b"}, Gazetteer{});
  const std::vector<double> zeros = {0, 0};
  const auto z = position_distribution(two, zeros);
  CHECK(z.unit_probs[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(z.unit_probs[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("position distribution sums to one with a positive floor") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> toks(1 + rng() % 8);
    for (auto& t : toks) t = std::string(1, static_cast<char>('b' + rng() % 4));
    const auto seg = segment(TokenSequence(toks), Gazetteer({TokenSequence{"b", "c"}}));
    std::vector<double> s(toks.size());
    for (auto& v : s) v = rng() % 3 == 0 ? 0.0 : u(rng);
    const auto p = position_distribution(seg, s);
    double total = 0.0;
    for (double v : p.unit_probs) {
      CHECK(v > 0.0);
      total += v;
    }
    CHECK(std::fabs(total - 1.0) <= 1e-9);
  }
}

TEST_CASE("position distribution rejects malformed saliency") {
  const Segmentation two = segment(TokenSequence{"a", "b"}, Gazetteer{});
  const std::vector<double> short_s = {1.0};
  const std::vector<double> negative = {1.0, -1.0};
  CHECK_THROWS_AS(position_distribution(two, short_s), Error);
  CHECK_THROWS_AS(position_distribution(two, negative), Error);
}

TEST_CASE("action draw is uniform over the three actions") {
  Rng rng(12345);
  std::array<int, 3> counts{};
  const int n = 300000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_action(rng.uniform()))];
  for (int c : counts) CHECK(std::fabs(static_cast<double>(c) / n - 1.0 / 3.0) <= 0.01);
  CHECK(sample_action(0.0) == EditKind::Insert);
  CHECK(sample_action(0.34) == EditKind::Delete);
  CHECK(sample_action(0.999999) == EditKind::Replace);
}

TEST_CASE("softmax examples") {
  const std::vector<double> s = {-1.0, -2.0};
  const auto p = softmax(s);
  CHECK(p[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.2689).epsilon(1e-4));
  const std::vector<double> big = {1000.0, 1000.0};
  const auto q = softmax(big);
  CHECK(q[0] == 0.5);
}

TEST_CASE("transition arithmetic") {
  FixedSaliency sal;
  FixedProposer prop;
  KernelContext ctx{&sal, &prop, {}};

  SUBCASE("replace: 0.5 * 1/3 * 0.2 = 1/30") {
    const StateView view(EditState::initial(TokenSequence{"y", "y"}, evidence_with({})), ctx);
    const auto p = make_proposal(view, {EditKind::Replace, 0, TokenSequence{"x"}, Space::Token});
    REQUIRE(p.ok());
    CHECK(std::exp(p.forward_logprob) == doctest::Approx(1.0 / 30.0).epsilon(1e-12));
  }
  SUBCASE("insert: 0.25 * 1/3 * 0.5 * 0.4 = 1/60") {
    struct Proposer40 final : Proposer {
      TokenDistribution token_dist(const MaskedSequence&, const EvidenceSet&) const override {
        return TokenDistribution{{"x", "y"}, {0.4, 0.6}};
      }
      std::vector<double> entity_scores(const MaskedSequence&, const EvidenceSet&,
                                        std::span<const TokenSequence> c) const override {
        return std::vector<double>(c.size(), 0.0);
      }
    } p40;
    KernelContext ctx40{&sal, &p40, {}};
    const StateView view(EditState::initial(TokenSequence{"b", "c", "d"}, evidence_with({TokenSequence{"Q"}})), ctx40);
    REQUIRE(view.positions().gap_probs.size() == 4);
    const auto p = make_proposal(view, {EditKind::Insert, 0, TokenSequence{"x"}, Space::Token});
    REQUIRE(p.ok());
    CHECK(std::exp(p.forward_logprob) == doctest::Approx(1.0 / 60.0).epsilon(1e-12));
    // Reverse is the deletion of "x" with P3 = 1.
    REQUIRE(p.reverse_action);
    CHECK(p.reverse_action->kind == EditKind::Delete);
    const StateView after(*p.new_state, ctx40);
    CHECK(p.reverse_logprob ==
          doctest::Approx(std::log(after.positions().unit_probs[0]) + std::log(1.0 / 3.0)).epsilon(1e-15));
  }
  SUBCASE("two-candidate entity space samples by softmax") {
    prop.entity_table = {-1.0, -2.0};
    const auto ev = evidence_with({TokenSequence{"P"}, TokenSequence{"Q"}});
    const StateView view(EditState::initial(TokenSequence{"P", "c"}, ev), ctx);
    const auto& probs = view.entity_probs(0, 1);
    CHECK(probs[0] == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(propose_replace(view, 0, 0.5).action.content == TokenSequence{"P"});
    CHECK(propose_replace(view, 0, 0.9).action.content == TokenSequence{"Q"});
  }
}

TEST_CASE("self-replacement is symmetric") {
  FixedSaliency sal;
  FixedProposer prop;
  KernelContext ctx{&sal, &prop, {}};
  const StateView view(EditState::initial(TokenSequence{"x", "c"}, evidence_with({})), ctx);
  const auto p = make_proposal(view, {EditKind::Replace, 0, TokenSequence{"x"}, Space::Token});
  REQUIRE(p.ok());
  CHECK(p.new_state->current() == view.state().current());
  CHECK(p.forward_logprob == p.reverse_logprob);
}

TEST_CASE("deletion has forward P3 = 1 and the single-unit guard") {
  FixedSaliency sal;
  FixedProposer prop;
  KernelContext ctx{&sal, &prop, {}};
  const StateView view(EditState::initial(TokenSequence{"x", "y"}, evidence_with({})), ctx);
  const auto p = propose_delete(view, 1);
  REQUIRE(p.ok());
  CHECK(p.forward_logprob == doctest::Approx(std::log(0.5 / 3.0)).epsilon(1e-15));
  CHECK(p.new_state->current() == TokenSequence{"x"});
  // Reverse: insert "y" at gap 1 of 2, empty entity space so the token branch has weight 1.
  CHECK(p.reverse_logprob == doctest::Approx(std::log(0.5 / 3.0 * 0.8)).epsilon(1e-15));

  const StateView single(EditState::initial(TokenSequence{"b"}, evidence_with({})), ctx);
  CHECK(propose_delete(single, 0).status == ProposalStatus::EmptyResult);
}

TEST_CASE("forward probabilities sum to one per action branch") {
  // Full enumeration on a 2-token state over a 2-token vocabulary.
  const LexicalVerifier verifier;
  const OcclusionSaliency sal(verifier);
  const UniformProposer prop({"b", "c"});
  for (const bool with_entities : {false, true}) {
    KernelContext ctx{&sal, &prop, {}};
    const auto ev = with_entities ? evidence_with({TokenSequence{"d", "e"}}, {TokenSequence{"c", "d", "e"}})
                                  : evidence_with({}, {TokenSequence{"c"}});
    const StateView view(EditState::initial(TokenSequence{"b", "c"}, ev), ctx);
    const double third = std::log(1.0 / 3.0);
    double del = 0.0, rep = 0.0, ins = 0.0;
    for (std::size_t u = 0; u < view.state().unit_count(); ++u) {
      del += std::exp(action_logprob(view, {EditKind::Delete, u, std::nullopt, Space::Token}) - third);
      for (const char* t : {"b", "c"}) {
        rep += std::exp(action_logprob(view, {EditKind::Replace, u, TokenSequence{t}, Space::Token}) - third);
      }
    }
    for (std::size_t g = 0; g < view.state().gap_count(); ++g) {
      for (const char* t : {"b", "c"}) {
        ins += std::exp(action_logprob(view, {EditKind::Insert, g, TokenSequence{t}, Space::Token}) - third);
      }
      for (const auto& e : view.candidates()) {
        ins += std::exp(action_logprob(view, {EditKind::Insert, g, e, Space::Entity}) - third);
      }
    }
    CHECK(del == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ins == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("reverse moves reconstruct x and agree with the forward evaluation on x'") {
  std::mt19937_64 rng(21);
  const std::vector<TokenSequence> passages = {TokenSequence::tokenize("Carl Lee was born in Oslo in 1950 .")};
  const std::vector<TokenSequence> entities = {TokenSequence{"Carl", "Lee"}, TokenSequence{"Oslo"},
                                               TokenSequence{"Bergen"}, TokenSequence{"Anna", "Berg"}};
  const auto ev = evidence_with(entities, passages);
  const auto lm = NGramMLM::train(passages, {TokenSequence{"Bergen", "Anna", "Berg"}}, {3, 0.05});
  const LexicalVerifier verifier;
  const OcclusionSaliency sal(verifier);
  const NGramProposer prop(lm);
  KernelContext ctx{&sal, &prop, {}};

  EditState x = EditState::initial(TokenSequence::tokenize("Anna Berg was born in Bergen ."), ev);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const StateView view(x, ctx);
    ProposalDraws d{};
    Rng r(rng());
    d.action = r.uniform();
    d.position = r.uniform();
    d.branch = r.uniform();
    d.content = r.uniform();
    const auto p = propose(view, d);
    if (!p.ok()) continue;
    REQUIRE(p.reverse_action);
    const StateView after(*p.new_state, ctx);
    CHECK(std::fabs(action_logprob(after, *p.reverse_action) - p.reverse_logprob) <= 1e-12);
    const auto back = make_proposal(after, *p.reverse_action);
    REQUIRE(back.ok());
    CHECK(back.new_state->current() == x.current());
    CHECK(std::fabs(back.reverse_logprob - p.forward_logprob) <= 1e-12);
    CHECK(std::fabs(back.forward_logprob - p.reverse_logprob) <= 1e-12);
    ++checked;
    x = *p.new_state;
  }
  CHECK(checked > 1000);
}

TEST_CASE("propose is reproducible for fixed draws") {
  const LexicalVerifier verifier;
  const OcclusionSaliency sal(verifier);
  const UniformProposer prop({"b", "c", "d"});
  KernelContext ctx{&sal, &prop, {}};
  const auto ev = evidence_with({TokenSequence{"d", "e"}}, {TokenSequence{"b", "d", "e"}});
  const ProposalDraws d{0.5, 0.3, 0.7, 0.2};
  const StateView v1(EditState::initial(TokenSequence{"b", "c", "d"}, ev), ctx);
  const StateView v2(EditState::initial(TokenSequence{"b", "c", "d"}, ev), ctx);
  const auto p1 = propose(v1, d);
  const auto p2 = propose(v2, d);
  CHECK(p1.action == p2.action);
  CHECK(p1.forward_logprob == p2.forward_logprob);
  CHECK(p1.reverse_logprob == p2.reverse_logprob);
}

TEST_CASE("disabled actions and length bounds reject") {
  FixedSaliency sal;
  FixedProposer prop;
  KernelConfig cfg;
  cfg.enabled = {true, false, true};
  cfg.max_tokens = 2;
  KernelContext ctx{&sal, &prop, cfg};
  const StateView view(EditState::initial(TokenSequence{"b", "c"}, evidence_with({})), ctx);
  CHECK(propose_delete(view, 0).status == ProposalStatus::ActionDisabled);
  CHECK(make_proposal(view, {EditKind::Insert, 0, TokenSequence{"x"}, Space::Token}).status ==
        ProposalStatus::LengthBound);
  CHECK_THROWS_AS(make_proposal(view, {EditKind::Replace, 5, TokenSequence{"x"}, Space::Token}), Error);
}
