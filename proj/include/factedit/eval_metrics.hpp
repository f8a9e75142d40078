#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "factedit/text_state.hpp"

namespace factedit {

struct SariScore {
  double keep_f1 = 0.0;
  double delete_f1 = 0.0;
  double add_f1 = 0.0;
  double final = 0.0;
};

struct SariOptions {
  /// Highest n-gram order; 1 gives unigram-only SARI.
  std::size_t max_n = 4;
};

/// Keep, delete and add F1 of n-gram multisets, averaged over n = 1..max_n.
/// Per n: keep compares src&out with src&ref, add compares out-src with
/// ref-src, delete compares src-out with src-ref. 0/0 counts as 1 for
/// precision and recall; F1 is 0 when P + R = 0. With several references
/// each component takes its maximum over references.
/// Throws Error(EmptyReference) without references.
SariScore sari(const TokenSequence& source, const TokenSequence& output, const std::vector<TokenSequence>& references,
               const SariOptions& options = {});

/// Bigram-overlap F1. 1 when neither side has a bigram, 0 when only one side
/// has none.
double rouge2(const TokenSequence& output, const TokenSequence& reference);

struct EvalInstance {
  std::string id;
  TokenSequence source;
  TokenSequence output;
  std::vector<TokenSequence> references;
  std::optional<std::string> label;
};

struct InstanceScore {
  std::string id;
  SariScore sari;
  double rouge2 = 0.0;
  /// Smallest Hamming distance from the output to a reference.
  double hamming = 0.0;
  bool exact_match = false;
};

struct CorpusReport {
  std::vector<InstanceScore> instances;
  SariScore mean_sari;
  double mean_rouge2 = 0.0;
  double mean_hamming = 0.0;
  double exact_match_rate = 0.0;
  /// Instances per gold label; unlabeled instances count under "".
  std::map<std::string, std::size_t> label_counts;
};

/// ROUGE-2 takes the best reference.
CorpusReport evaluate_corpus(const std::vector<EvalInstance>& instances, const SariOptions& options = {});

}  // namespace factedit
