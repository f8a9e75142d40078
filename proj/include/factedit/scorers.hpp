#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <string>
#include <unordered_map>
#include <vector>

#include "factedit/text_state.hpp"

namespace factedit {

inline constexpr double kProbFloor = 1e-6;

/// Clamps a verifier probability into [1e-6, 1 - 1e-6].
double clamp_support(double p);

class FluencyModel {
 public:
  virtual ~FluencyModel() = default;
  /// Sum over positions of log P(w_i | rest of the sequence); always <= 0.
  virtual double pseudo_loglik(const TokenSequence& seq) const = 0;
};

class Verifier {
 public:
  virtual ~Verifier() = default;
  /// P(SUPPORTED | seq, evidence) in [1e-6, 1 - 1e-6]. `seq` may be empty.
  virtual double support_prob(const TokenSequence& seq, const EvidenceSet& evidence) const = 0;
};

class SaliencyModel {
 public:
  virtual ~SaliencyModel() = default;
  /// One non-negative score per token of `seq`.
  virtual std::vector<double> token_saliency(const TokenSequence& seq, const EvidenceSet& evidence) const = 0;
};

/// Add-k smoothed n-gram model queried in both directions. The masked-token
/// probability of w_i is approximated by averaging the log-probabilities of
/// a left-to-right model (history w_{i-n+1..i-1}) and a right-to-left model
/// (history w_{i+1..i+n-1}). Histories are padded with a boundary symbol;
/// there is no backoff.
class NGramMLM final : public FluencyModel {
 public:
  struct Options {
    std::size_t order = 3;
    double smoothing = 1.0;
  };

  /// Untrained model over `vocabulary`: uniform for every context.
  NGramMLM(Options options, const std::vector<std::string>& vocabulary);

  /// Vocabulary = corpus tokens plus `extra_vocabulary` tokens.
  static NGramMLM train(const std::vector<TokenSequence>& corpus,
                        const std::vector<TokenSequence>& extra_vocabulary, Options options);

  double pseudo_loglik(const TokenSequence& seq) const override;

  /// Bidirectional log-probability of seq[i] in place.
  double token_logprob(const TokenSequence& seq, std::size_t i) const;
  /// Sum of token_logprob over positions [begin, end).
  double window_logprob(const TokenSequence& seq, std::size_t begin, std::size_t end) const;
  /// P(word | left context ending at position `i` of `seq`), i.e. the
  /// history is seq[i-n+1 .. i-1].
  double forward_prob(const TokenSequence& seq, std::size_t i, std::string_view word) const;
  /// P(word | right context starting at position `i + 1` of `seq`).
  double backward_prob(const TokenSequence& seq, std::size_t i, std::string_view word) const;

  const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }
  std::size_t vocab_size() const noexcept { return vocab_.size(); }
  std::size_t order() const noexcept { return options_.order; }
  double smoothing() const noexcept { return options_.smoothing; }

 private:
  using Key = std::string;

  struct Direction {
    std::unordered_map<Key, std::uint32_t> ngrams;
    std::unordered_map<Key, std::uint32_t> histories;
  };

  std::int32_t id_of(std::string_view token) const;
  void count(Direction& dir, const std::vector<std::int32_t>& ids);
  double prob(const Direction& dir, std::span<const std::int32_t> history, std::int32_t word) const;
  std::vector<std::int32_t> ids_of(const TokenSequence& seq) const;
  double forward_prob_ids(const std::vector<std::int32_t>& ids, std::size_t i, std::int32_t word) const;
  double backward_prob_ids(const std::vector<std::int32_t>& ids, std::size_t i, std::int32_t word) const;

  Options options_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::int32_t> index_;
  Direction forward_;
  Direction backward_;
};

/// Evidence-coverage verifier: sigmoid(steepness * (coverage - midpoint)),
/// where coverage is the share of non-stopword, non-punctuation claim tokens
/// mentioned in the evidence (1 when there are none).
class LexicalVerifier final : public Verifier {
 public:
  struct Options {
    double steepness = 10.0;
    double midpoint = 0.5;
  };

  LexicalVerifier() = default;
  explicit LexicalVerifier(Options options) : options_(options) {}

  double support_prob(const TokenSequence& seq, const EvidenceSet& evidence) const override;
  static double coverage(const TokenSequence& seq, const EvidenceSet& evidence);
  const Options& options() const noexcept { return options_; }

 private:
  Options options_{};
};

/// s_i = | E_V(seq without token i) - E_V(seq) | with E_V = -log P_V.
class OcclusionSaliency final : public SaliencyModel {
 public:
  explicit OcclusionSaliency(const Verifier& verifier) : verifier_(&verifier) {}
  std::vector<double> token_saliency(const TokenSequence& seq, const EvidenceSet& evidence) const override;

 private:
  const Verifier* verifier_;
};

/// Constant saliency; turns position sampling into uniform token masking.
class UniformSaliency final : public SaliencyModel {
 public:
  std::vector<double> token_saliency(const TokenSequence& seq, const EvidenceSet&) const override {
    return std::vector<double>(seq.size(), 1.0);
  }
};

}  // namespace factedit
