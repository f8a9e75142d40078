#include "factedit/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

namespace factedit {
namespace {

constexpr std::int32_t kBoundary = -1;
constexpr std::int32_t kUnknown = -2;

std::string encode(std::span<const std::int32_t> ids) {
  std::string key(ids.size() * sizeof(std::int32_t), '\0');
  if (!ids.empty()) std::memcpy(key.data(), ids.data(), key.size());
  return key;
}

}  // namespace

double clamp_support(double p) {
  if (std::isnan(p)) return kProbFloor;
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

// ---------------------------------------------------------------------------
// NGramMLM

NGramMLM::NGramMLM(Options options, const std::vector<std::string>& vocabulary) : options_(options) {
  if (options_.order == 0) options_.order = 1;
  std::set<std::string> unique(vocabulary.begin(), vocabulary.end());
  vocab_.assign(unique.begin(), unique.end());
  for (std::size_t i = 0; i < vocab_.size(); ++i) index_.emplace(vocab_[i], static_cast<std::int32_t>(i));
}

NGramMLM NGramMLM::train(const std::vector<TokenSequence>& corpus, const std::vector<TokenSequence>& extra_vocabulary,
                         Options options) {
  std::vector<std::string> vocab;
  for (const auto* group : {&corpus, &extra_vocabulary}) {
    for (const auto& seq : *group) vocab.insert(vocab.end(), seq.begin(), seq.end());
  }
  NGramMLM model(options, vocab);
  for (const auto& seq : corpus) {
    auto ids = model.ids_of(seq);
    model.count(model.forward_, ids);
    std::reverse(ids.begin(), ids.end());
    model.count(model.backward_, ids);
  }
  return model;
}

std::int32_t NGramMLM::id_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknown : it->second;
}

std::vector<std::int32_t> NGramMLM::ids_of(const TokenSequence& seq) const {
  std::vector<std::int32_t> ids;
  ids.reserve(seq.size());
  for (const auto& t : seq) ids.push_back(id_of(t));
  return ids;
}

void NGramMLM::count(Direction& dir, const std::vector<std::int32_t>& ids) {
  const std::size_t h = options_.order - 1;
  std::vector<std::int32_t> window(h + 1, kBoundary);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < h; ++j) {
      const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(h) + static_cast<std::ptrdiff_t>(j);
      window[j] = pos < 0 ? kBoundary : ids[static_cast<std::size_t>(pos)];
    }
    window[h] = ids[i];
    ++dir.histories[encode(std::span<const std::int32_t>(window.data(), h))];
    ++dir.ngrams[encode(window)];
  }
}

double NGramMLM::prob(const Direction& dir, std::span<const std::int32_t> history, std::int32_t word) const {
  const double k = options_.smoothing;
  const double v = static_cast<double>(std::max<std::size_t>(vocab_.size(), 1));
  std::vector<std::int32_t> key(history.begin(), history.end());
  const auto hit = dir.histories.find(encode(key));
  const double hist_count = hit == dir.histories.end() ? 0.0 : static_cast<double>(hit->second);
  double ngram_count = 0.0;
  if (hist_count > 0.0) {
    key.push_back(word);
    const auto nit = dir.ngrams.find(encode(key));
    if (nit != dir.ngrams.end()) ngram_count = static_cast<double>(nit->second);
  }
  return (ngram_count + k) / (hist_count + k * v);
}

double NGramMLM::forward_prob_ids(const std::vector<std::int32_t>& ids, std::size_t i, std::int32_t word) const {
  const std::size_t h = options_.order - 1;
  std::vector<std::int32_t> history(h, kBoundary);
  for (std::size_t j = 0; j < h; ++j) {
    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(h) + static_cast<std::ptrdiff_t>(j);
    if (pos >= 0) history[j] = ids[static_cast<std::size_t>(pos)];
  }
  return prob(forward_, history, word);
}

double NGramMLM::backward_prob_ids(const std::vector<std::int32_t>& ids, std::size_t i, std::int32_t word) const {
  // Mirror of the forward history: farthest right neighbour first.
  const std::size_t h = options_.order - 1;
  std::vector<std::int32_t> history(h, kBoundary);
  for (std::size_t j = 0; j < h; ++j) {
    const std::size_t pos = i + h - j;
    if (pos < ids.size()) history[j] = ids[pos];
  }
  return prob(backward_, history, word);
}

double NGramMLM::forward_prob(const TokenSequence& seq, std::size_t i, std::string_view word) const {
  return forward_prob_ids(ids_of(seq), i, id_of(word));
}

double NGramMLM::backward_prob(const TokenSequence& seq, std::size_t i, std::string_view word) const {
  return backward_prob_ids(ids_of(seq), i, id_of(word));
}

double NGramMLM::token_logprob(const TokenSequence& seq, std::size_t i) const {
  const auto ids = ids_of(seq);
  return 0.5 * (std::log(forward_prob_ids(ids, i, ids[i])) + std::log(backward_prob_ids(ids, i, ids[i])));
}

double NGramMLM::pseudo_loglik(const TokenSequence& seq) const { return window_logprob(seq, 0, seq.size()); }

double NGramMLM::window_logprob(const TokenSequence& seq, std::size_t begin, std::size_t end) const {
  const auto ids = ids_of(seq);
  end = std::min(end, ids.size());
  double total = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    total += 0.5 * (std::log(forward_prob_ids(ids, i, ids[i])) + std::log(backward_prob_ids(ids, i, ids[i])));
  }
  return total;
}

// ---------------------------------------------------------------------------
// LexicalVerifier

double LexicalVerifier::coverage(const TokenSequence& seq, const EvidenceSet& evidence) {
  std::size_t content = 0;
  std::size_t covered = 0;
  for (const auto& t : seq) {
    if (is_stopword(t) || is_punctuation(t)) continue;
    ++content;
    if (evidence.mentions(t)) ++covered;
  }
  if (content == 0) return 1.0;
  return static_cast<double>(covered) / static_cast<double>(content);
}

double LexicalVerifier::support_prob(const TokenSequence& seq, const EvidenceSet& evidence) const {
  const double c = coverage(seq, evidence);
  const double z = options_.steepness * (c - options_.midpoint);
  return clamp_support(1.0 / (1.0 + std::exp(-z)));
}

// ---------------------------------------------------------------------------
// OcclusionSaliency

std::vector<double> OcclusionSaliency::token_saliency(const TokenSequence& seq, const EvidenceSet& evidence) const {
  const double base = -std::log(verifier_->support_prob(seq, evidence));
  std::vector<double> out(seq.size(), 0.0);
  std::vector<std::string> buffer;
  buffer.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    buffer.clear();
    for (std::size_t j = 0; j < seq.size(); ++j) {
      if (j != i) buffer.push_back(seq[j]);
    }
    const double occluded = -std::log(verifier_->support_prob(TokenSequence(buffer), evidence));
    out[i] = std::fabs(occluded - base);
  }
  return out;
}

}  // namespace factedit
