#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <iterator>
#include <random>

#include "factedit/error.hpp"
#include "factedit/eval_metrics.hpp"

using namespace factedit;

namespace {

TokenSequence t(const std::string& s) { return TokenSequence::tokenize(s); }

// Independent SARI: n-grams as sorted vectors, multiset algebra via the
// <algorithm> set operations.
using Grams = std::vector<std::string>;

Grams grams(const TokenSequence& s, std::size_t n) {
  Grams g;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    std::string key;
    for (std::size_t j = i; j < i + n; ++j) key += s[j] + "\x1f";
    g.push_back(key);
  }
  std::sort(g.begin(), g.end());
  return g;
}

Grams meet(const Grams& a, const Grams& b) {
  Grams o;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(o));
  return o;
}

Grams without(const Grams& a, const Grams& b) {
  Grams o;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(o));
  return o;
}

double oracle_f1(const Grams& sys, const Grams& ref) {
  const double overlap = static_cast<double>(meet(sys, ref).size());
  const double p = sys.empty() ? 1.0 : overlap / static_cast<double>(sys.size());
  const double r = ref.empty() ? 1.0 : overlap / static_cast<double>(ref.size());
  return p + r == 0.0 ? 0.0 : 2 * p * r / (p + r);
}

SariScore oracle_sari(const TokenSequence& src, const TokenSequence& out, const TokenSequence& ref, std::size_t max_n) {
  SariScore s;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto gs = grams(src, n), go = grams(out, n), gr = grams(ref, n);
    s.keep_f1 += oracle_f1(meet(gs, go), meet(gs, gr));
    s.add_f1 += oracle_f1(without(go, gs), without(gr, gs));
    s.delete_f1 += oracle_f1(without(gs, go), without(gs, gr));
  }
  s.keep_f1 /= static_cast<double>(max_n);
  s.add_f1 /= static_cast<double>(max_n);
  s.delete_f1 /= static_cast<double>(max_n);
  s.final = (s.keep_f1 + s.add_f1 + s.delete_f1) / 3.0;
  return s;
}

TokenSequence random_seq(std::mt19937_64& rng, std::size_t max_len) {
  static const std::vector<std::string> words = {"a", "b", "c", "d", "e"};
  std::vector<std::string> toks(rng() % (max_len + 1));
  for (auto& w : toks) w = words[rng() % words.size()];
  return TokenSequence(toks);
}

}  // namespace

TEST_CASE("SARI hand examples") {
  const SariOptions uni{1};
  const auto fixed = sari(t("a b c"), t("a d c"), {t("a d c")}, uni);
  CHECK(fixed.keep_f1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fixed.add_f1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fixed.delete_f1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fixed.final == doctest::Approx(1.0).epsilon(1e-9));

  const auto copied = sari(t("a b c"), t("a b c"), {t("a d c")}, uni);
  CHECK(std::fabs(copied.keep_f1 - 0.8) <= 1e-9);
  CHECK(copied.add_f1 == 0.0);
  CHECK(copied.delete_f1 == 0.0);
  CHECK(std::fabs(copied.final - 0.8 / 3.0) <= 1e-9);

  const auto same = sari(t("x y z"), t("x y z"), {t("x y z")});
  CHECK(same.final == 1.0);
}

TEST_CASE("SARI with multiple references takes the best per component") {
  const SariOptions uni{1};
  const auto s = sari(t("a b c"), t("a b c"), {t("a d c"), t("a b c")}, uni);
  CHECK(s.keep_f1 == 1.0);
  CHECK(s.final == doctest::Approx((s.keep_f1 + s.delete_f1 + s.add_f1) / 3.0).epsilon(1e-15));
}

TEST_CASE("SARI requires a reference") {
  try {
    sari(t("a"), t("a"), {});
    FAIL("expected EmptyReference");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyReference);
  }
}

TEST_CASE("SARI with the reference as output is perfect") {
  std::mt19937_64 rng(23);
  int checked = 0;
  while (checked < 100) {
    const auto s = random_seq(rng, 6), r = random_seq(rng, 6);
    if (s == r) continue;
    const auto score = sari(s, r, {r});
    CHECK(score.keep_f1 == 1.0);
    CHECK(score.delete_f1 == 1.0);
    CHECK(score.add_f1 == 1.0);
    ++checked;
  }
}

TEST_CASE("SARI matches the independent oracle, stays in bounds, and final is the component mean") {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 10000; ++i) {
    const auto s = random_seq(rng, 7), o = random_seq(rng, 7), r = random_seq(rng, 7);
    const std::size_t max_n = 1 + rng() % 4;
    const auto got = sari(s, o, {r}, {max_n});
    const auto want = oracle_sari(s, o, r, max_n);
    CHECK(std::fabs(got.keep_f1 - want.keep_f1) <= 1e-12);
    CHECK(std::fabs(got.add_f1 - want.add_f1) <= 1e-12);
    CHECK(std::fabs(got.delete_f1 - want.delete_f1) <= 1e-12);
    for (double v : {got.keep_f1, got.add_f1, got.delete_f1, got.final}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(got.final == (got.keep_f1 + got.delete_f1 + got.add_f1) / 3.0);
  }
}

TEST_CASE("ROUGE-2 examples") {
  CHECK(rouge2(t("a b c"), t("a b c")) == 1.0);
  CHECK(rouge2(t("a b c"), t("c a d")) == 0.0);
  CHECK(std::fabs(rouge2(t("a b d"), t("a b c")) - 0.5) <= 1e-9);
  CHECK(rouge2(t("a"), t("b")) == 1.0);
  CHECK(rouge2(t("a"), t("a b")) == 0.0);
}

TEST_CASE("ROUGE-2 is symmetric and bounded") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_seq(rng, 6), b = random_seq(rng, 6);
    const double x = rouge2(a, b);
    CHECK(x == rouge2(b, a));
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("corpus means") {
  const SariOptions uni{1};
  std::vector<EvalInstance> corpus = {
      {"1", t("a b c"), t("a d c"), {t("a d c")}, "REFUTES"},
      {"2", t("a b c"), t("a b c"), {t("a d c")}, "REFUTES"},
  };
  const auto report = evaluate_corpus(corpus, uni);
  REQUIRE(report.instances.size() == 2);
  CHECK(std::fabs(report.mean_sari.final - (1.0 + 0.8 / 3.0) / 2.0) <= 1e-9);
  CHECK(report.mean_sari.final == doctest::Approx(0.6333).epsilon(1e-4));
  CHECK(report.exact_match_rate == 0.5);
  CHECK(report.mean_hamming == 0.5);
  CHECK(report.label_counts.at("REFUTES") == 2);

  const auto one = evaluate_corpus({corpus[1]}, uni);
  CHECK(one.mean_sari.final == one.instances[0].sari.final);

  std::vector<EvalInstance> perfect = {{"a", t("x y"), t("x z"), {t("x z")}, std::nullopt},
                                       {"b", t("p q r"), t("p q r"), {t("p q r")}, "SUPPORTS"}};
  const auto p = evaluate_corpus(perfect);
  CHECK(p.mean_sari.final == 1.0);
  CHECK(p.mean_rouge2 == 1.0);
  CHECK(p.exact_match_rate == 1.0);
  CHECK(p.label_counts.at("") == 1);
}
