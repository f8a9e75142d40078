#pragma once

#include <compare>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace factedit {

/// Whitespace-tokenized, case-preserving word sequence. Tokens are never
/// empty and never contain whitespace.
class TokenSequence {
 public:
  TokenSequence() = default;
  explicit TokenSequence(std::vector<std::string> tokens);
  TokenSequence(std::initializer_list<std::string> tokens);

  /// Splits on whitespace and detaches trailing punctuation (.,;:!?) as
  /// separate tokens.
  static TokenSequence tokenize(std::string_view text);

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  auto begin() const noexcept { return tokens_.begin(); }
  auto end() const noexcept { return tokens_.end(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  TokenSequence slice(std::size_t begin, std::size_t end) const;
  std::string text() const;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
  friend auto operator<=>(const TokenSequence&, const TokenSequence&) = default;

 private:
  std::vector<std::string> tokens_;
};

bool is_stopword(std::string_view token);
bool is_punctuation(std::string_view token);
std::string to_lower(std::string_view s);

enum class UnitKind { Token, Entity };

/// Half-open token range [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  UnitKind kind = UnitKind::Token;

  std::size_t size() const noexcept { return end - start; }
  bool is_entity() const noexcept { return kind == UnitKind::Entity; }
  friend bool operator==(const Span&, const Span&) = default;
};

/// Disjoint, sorted units covering [0, |sequence|). Non-entity units are
/// always single tokens.
struct Segmentation {
  std::vector<Span> units;

  std::size_t size() const noexcept { return units.size(); }
  const Span& operator[](std::size_t i) const { return units[i]; }
  friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

/// Fixed list of entity surface forms matched case-sensitively.
class Gazetteer {
 public:
  Gazetteer() = default;
  explicit Gazetteer(const std::vector<TokenSequence>& entries);

  void add(const TokenSequence& entry);
  bool contains(const TokenSequence& entry) const;
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  /// Sorted and unique.
  const std::vector<TokenSequence>& entries() const noexcept { return entries_; }

  /// Length of the longest entry that matches `seq` starting at `pos`; 0 if
  /// none does.
  std::size_t longest_match(const TokenSequence& seq, std::size_t pos) const;

 private:
  void reindex();

  std::vector<TokenSequence> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_token_;
};

/// Leftmost-longest gazetteer match; every uncovered token is its own unit.
Segmentation segment(const TokenSequence& seq, const Gazetteer& gazetteer);

/// Maximal runs of capitalized tokens. A run that opens a sentence loses a
/// leading stopword ("The", "It", ...).
std::vector<TokenSequence> harvest_entities(const TokenSequence& text);

class EvidenceSet {
 public:
  EvidenceSet() = default;
  EvidenceSet(std::vector<TokenSequence> passages, Gazetteer gazetteer);

  /// Gazetteer = entities harvested from the passages and the claim, plus
  /// `extra` entries.
  static EvidenceSet build(std::vector<TokenSequence> passages, const TokenSequence& claim,
                           const std::vector<TokenSequence>& extra = {});

  const std::vector<TokenSequence>& passages() const noexcept { return passages_; }
  const Gazetteer& gazetteer() const noexcept { return gazetteer_; }

  /// Case-insensitive membership of a single token in any passage.
  bool mentions(std::string_view token) const;
  /// Whether `span` occurs contiguously (case-sensitive) in some passage.
  bool contains_span(const TokenSequence& span) const;

 private:
  std::vector<TokenSequence> passages_;
  Gazetteer gazetteer_;
  std::unordered_set<std::string> lowered_;
};

enum class EditKind { Insert, Delete, Replace };
enum class Space { Token, Entity };

std::string_view to_string(EditKind kind);
std::string_view to_string(Space space);

/// For Insert, `unit_index` is a gap: 0..|units|, inserting before unit
/// `unit_index`. Content is present iff kind != Delete.
struct EditAction {
  EditKind kind = EditKind::Replace;
  std::size_t unit_index = 0;
  std::optional<TokenSequence> content;
  Space space = Space::Token;

  friend bool operator==(const EditAction&, const EditAction&) = default;
};

/// Immutable chain state. The segmentation is always derived from `current`
/// with the evidence gazetteer.
class EditState {
 public:
  EditState(TokenSequence current, std::shared_ptr<const TokenSequence> original,
            std::shared_ptr<const EvidenceSet> evidence);

  static EditState initial(TokenSequence claim, std::shared_ptr<const EvidenceSet> evidence);

  const TokenSequence& current() const noexcept { return current_; }
  const Segmentation& segmentation() const noexcept { return segmentation_; }
  const TokenSequence& original() const noexcept { return *original_; }
  const EvidenceSet& evidence() const noexcept { return *evidence_; }
  const std::shared_ptr<const TokenSequence>& original_ptr() const noexcept { return original_; }
  const std::shared_ptr<const EvidenceSet>& evidence_ptr() const noexcept { return evidence_; }

  std::size_t unit_count() const noexcept { return segmentation_.size(); }
  std::size_t gap_count() const noexcept { return segmentation_.size() + 1; }
  TokenSequence unit_tokens(std::size_t unit) const;
  /// Token offset where gap `gap` sits.
  std::size_t gap_offset(std::size_t gap) const;
  /// Index of the unit spanning exactly [start, end), if any.
  std::optional<std::size_t> unit_with_span(std::size_t start, std::size_t end) const;
  /// Index of the gap at token offset `offset`, if a unit boundary sits there.
  std::optional<std::size_t> gap_at_offset(std::size_t offset) const;

 private:
  TokenSequence current_;
  Segmentation segmentation_;
  std::shared_ptr<const TokenSequence> original_;
  std::shared_ptr<const EvidenceSet> evidence_;
};

/// Applies `action` and re-segments. Throws Error(InvalidAction) for
/// malformed actions and Error(EmptyResult) when a deletion would empty the
/// claim.
EditState apply_edit(const EditState& state, const EditAction& action);

/// Splices `content` over units [unit_begin, unit_end) of `state` without
/// re-segmenting. Used by masking and reverse bookkeeping.
TokenSequence splice_units(const EditState& state, std::size_t unit_begin, std::size_t unit_end,
                           const TokenSequence& content);

}  // namespace factedit
