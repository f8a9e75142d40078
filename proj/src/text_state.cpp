#include "factedit/text_state.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "factedit/error.hpp"

namespace factedit {
namespace {

constexpr std::array<std::string_view, 64> kStopwords = {
    "a",     "an",    "the",   "is",    "are",   "was",   "were",  "be",    "been",  "being", "am",
    "of",    "in",    "on",    "at",    "to",    "for",   "from",  "by",    "with",  "and",   "or",
    "but",   "not",   "no",    "it",    "its",   "this",  "that",  "these", "those", "as",    "he",
    "she",   "they",  "his",   "her",   "their", "has",   "have",  "had",   "do",    "does",  "did",
    "which", "who",   "whom",  "what",  "there", "than",  "then",  "so",    "if",    "into",  "about",
    "also",  "only",  "i",     "we",    "you",   "him",   "them",  "our",   "your",
};

constexpr std::string_view kTrailingPunct = ".,;:!?";

bool has_space(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

bool capitalized(std::string_view token) {
  return !token.empty() && std::isupper(static_cast<unsigned char>(token.front())) != 0;
}

bool sentence_final(std::string_view token) { return token == "." || token == "!" || token == "?"; }

}  // namespace

TokenSequence::TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (const auto& t : tokens_) {
    if (t.empty() || has_space(t)) throw Error(Errc::InvalidAction, "malformed token '" + t + "'");
  }
}

TokenSequence::TokenSequence(std::initializer_list<std::string> tokens)
    : TokenSequence(std::vector<std::string>(tokens)) {}

TokenSequence TokenSequence::tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])) != 0) ++i;
    std::size_t j = i;
    while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j])) == 0) ++j;
    if (j > i) {
      std::string_view word = text.substr(i, j - i);
      std::vector<std::string> tail;
      while (word.size() > 1 && kTrailingPunct.find(word.back()) != std::string_view::npos) {
        tail.emplace_back(1, word.back());
        word.remove_suffix(1);
      }
      out.emplace_back(word);
      out.insert(out.end(), tail.rbegin(), tail.rend());
    }
    i = j;
  }
  return TokenSequence(std::move(out));
}

TokenSequence TokenSequence::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, tokens_.size());
  begin = std::min(begin, end);
  return TokenSequence(std::vector<std::string>(tokens_.begin() + static_cast<std::ptrdiff_t>(begin),
                                                tokens_.begin() + static_cast<std::ptrdiff_t>(end)));
}

std::string TokenSequence::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens_[i];
  }
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_stopword(std::string_view token) {
  const std::string lowered = to_lower(token);
  return std::find(kStopwords.begin(), kStopwords.end(), lowered) != kStopwords.end();
}

bool is_punctuation(std::string_view token) {
  return !token.empty() &&
         std::all_of(token.begin(), token.end(), [](unsigned char c) { return std::ispunct(c) != 0; });
}

// ---------------------------------------------------------------------------
// Gazetteer

Gazetteer::Gazetteer(const std::vector<TokenSequence>& entries) {
  for (const auto& e : entries) {
    if (!e.empty()) entries_.push_back(e);
  }
  reindex();
}

void Gazetteer::add(const TokenSequence& entry) {
  if (entry.empty() || contains(entry)) return;
  entries_.push_back(entry);
  reindex();
}

bool Gazetteer::contains(const TokenSequence& entry) const {
  return std::binary_search(entries_.begin(), entries_.end(), entry);
}

void Gazetteer::reindex() {
  std::sort(entries_.begin(), entries_.end());
  entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
  by_first_token_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) by_first_token_[entries_[i][0]].push_back(i);
}

std::size_t Gazetteer::longest_match(const TokenSequence& seq, std::size_t pos) const {
  if (pos >= seq.size()) return 0;
  auto it = by_first_token_.find(seq[pos]);
  if (it == by_first_token_.end()) return 0;
  std::size_t best = 0;
  for (std::size_t idx : it->second) {
    const TokenSequence& entry = entries_[idx];
    if (entry.size() <= best || pos + entry.size() > seq.size()) continue;
    if (std::equal(entry.begin(), entry.end(), seq.begin() + static_cast<std::ptrdiff_t>(pos))) best = entry.size();
  }
  return best;
}

Segmentation segment(const TokenSequence& seq, const Gazetteer& gazetteer) {
  Segmentation seg;
  seg.units.reserve(seq.size());
  std::size_t pos = 0;
  while (pos < seq.size()) {
    const std::size_t len = gazetteer.longest_match(seq, pos);
    if (len > 0) {
      seg.units.push_back({pos, pos + len, UnitKind::Entity});
      pos += len;
    } else {
      seg.units.push_back({pos, pos + 1, UnitKind::Token});
      ++pos;
    }
  }
  return seg;
}

std::vector<TokenSequence> harvest_entities(const TokenSequence& text) {
  std::vector<TokenSequence> found;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!capitalized(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && capitalized(text[j])) ++j;
    std::size_t begin = i;
    const bool opens_sentence = i == 0 || sentence_final(text[i - 1]);
    if (opens_sentence && is_stopword(text[begin])) ++begin;
    if (begin < j) found.push_back(text.slice(begin, j));
    i = j;
  }
  return found;
}

// ---------------------------------------------------------------------------
// EvidenceSet

EvidenceSet::EvidenceSet(std::vector<TokenSequence> passages, Gazetteer gazetteer)
    : passages_(std::move(passages)), gazetteer_(std::move(gazetteer)) {
  for (const auto& p : passages_) {
    for (const auto& t : p) lowered_.insert(to_lower(t));
  }
}

EvidenceSet EvidenceSet::build(std::vector<TokenSequence> passages, const TokenSequence& claim,
                               const std::vector<TokenSequence>& extra) {
  std::vector<TokenSequence> entries = extra;
  for (const auto& p : passages) {
    auto harvested = harvest_entities(p);
    entries.insert(entries.end(), harvested.begin(), harvested.end());
  }
  auto from_claim = harvest_entities(claim);
  entries.insert(entries.end(), from_claim.begin(), from_claim.end());
  return EvidenceSet(std::move(passages), Gazetteer(entries));
}

bool EvidenceSet::mentions(std::string_view token) const { return lowered_.count(to_lower(token)) > 0; }

bool EvidenceSet::contains_span(const TokenSequence& span) const {
  if (span.empty()) return false;
  for (const auto& p : passages_) {
    if (std::search(p.begin(), p.end(), span.begin(), span.end()) != p.end()) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Edits

std::string_view to_string(EditKind kind) {
  switch (kind) {
    case EditKind::Insert:
      return "insert";
    case EditKind::Delete:
      return "delete";
    case EditKind::Replace:
      return "replace";
  }
  return "?";
}

std::string_view to_string(Space space) { return space == Space::Entity ? "entity" : "token"; }

EditState::EditState(TokenSequence current, std::shared_ptr<const TokenSequence> original,
                     std::shared_ptr<const EvidenceSet> evidence)
    : current_(std::move(current)), original_(std::move(original)), evidence_(std::move(evidence)) {
  if (!original_) original_ = std::make_shared<const TokenSequence>(current_);
  if (!evidence_) evidence_ = std::make_shared<const EvidenceSet>();
  segmentation_ = segment(current_, evidence_->gazetteer());
}

EditState EditState::initial(TokenSequence claim, std::shared_ptr<const EvidenceSet> evidence) {
  auto original = std::make_shared<const TokenSequence>(claim);
  return EditState(std::move(claim), std::move(original), std::move(evidence));
}

TokenSequence EditState::unit_tokens(std::size_t unit) const {
  const Span& s = segmentation_.units.at(unit);
  return current_.slice(s.start, s.end);
}

std::size_t EditState::gap_offset(std::size_t gap) const {
  if (gap >= segmentation_.size()) return current_.size();
  return segmentation_[gap].start;
}

std::optional<std::size_t> EditState::unit_with_span(std::size_t start, std::size_t end) const {
  auto it = std::lower_bound(segmentation_.units.begin(), segmentation_.units.end(), start,
                             [](const Span& s, std::size_t v) { return s.start < v; });
  if (it == segmentation_.units.end() || it->start != start || it->end != end) return std::nullopt;
  return static_cast<std::size_t>(it - segmentation_.units.begin());
}

std::optional<std::size_t> EditState::gap_at_offset(std::size_t offset) const {
  if (offset == current_.size()) return segmentation_.size();
  auto it = std::lower_bound(segmentation_.units.begin(), segmentation_.units.end(), offset,
                             [](const Span& s, std::size_t v) { return s.start < v; });
  if (it == segmentation_.units.end() || it->start != offset) return std::nullopt;
  return static_cast<std::size_t>(it - segmentation_.units.begin());
}

TokenSequence splice_units(const EditState& state, std::size_t unit_begin, std::size_t unit_end,
                           const TokenSequence& content) {
  const auto& seq = state.current();
  const std::size_t from = state.gap_offset(unit_begin);
  const std::size_t to = state.gap_offset(unit_end);
  std::vector<std::string> out;
  out.reserve(seq.size() - (to - from) + content.size());
  out.insert(out.end(), seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(from));
  out.insert(out.end(), content.begin(), content.end());
  out.insert(out.end(), seq.begin() + static_cast<std::ptrdiff_t>(to), seq.end());
  return TokenSequence(std::move(out));
}

EditState apply_edit(const EditState& state, const EditAction& action) {
  const std::size_t units = state.unit_count();
  switch (action.kind) {
    case EditKind::Delete: {
      if (action.unit_index >= units) throw Error(Errc::InvalidAction, "delete index out of range");
      if (action.content) throw Error(Errc::InvalidAction, "delete carries no content");
      if (units == 1) throw Error(Errc::EmptyResult, "deleting the only unit would empty the claim");
      TokenSequence next = splice_units(state, action.unit_index, action.unit_index + 1, TokenSequence{});
      return EditState(std::move(next), state.original_ptr(), state.evidence_ptr());
    }
    case EditKind::Replace: {
      if (action.unit_index >= units) throw Error(Errc::InvalidAction, "replace index out of range");
      if (!action.content || action.content->empty()) throw Error(Errc::InvalidAction, "replace needs content");
      TokenSequence next = splice_units(state, action.unit_index, action.unit_index + 1, *action.content);
      return EditState(std::move(next), state.original_ptr(), state.evidence_ptr());
    }
    case EditKind::Insert: {
      if (action.unit_index > units) throw Error(Errc::InvalidAction, "insert gap out of range");
      if (!action.content || action.content->empty()) throw Error(Errc::InvalidAction, "insert needs content");
      TokenSequence next = splice_units(state, action.unit_index, action.unit_index, *action.content);
      return EditState(std::move(next), state.original_ptr(), state.evidence_ptr());
    }
  }
  throw Error(Errc::InvalidAction, "unknown edit kind");
}

}  // namespace factedit
