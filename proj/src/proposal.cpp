#include "factedit/proposal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "factedit/error.hpp"
#include "factedit/kernels.hpp"
#include "factedit/rng.hpp"

namespace factedit {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

std::size_t candidate_index(const std::vector<TokenSequence>& candidates, const TokenSequence& content) {
  auto it = std::lower_bound(candidates.begin(), candidates.end(), content);
  if (it == candidates.end() || *it != content) return candidates.size();
  return static_cast<std::size_t>(it - candidates.begin());
}

Proposal rejected(const EditAction& action, ProposalStatus status) {
  Proposal p;
  p.action = action;
  p.status = status;
  p.forward_logprob = kNegInf;
  p.reverse_logprob = kNegInf;
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Position distribution

PositionDistribution position_distribution(const Segmentation& segmentation, std::span<const double> saliency) {
  std::size_t tokens = 0;
  for (const auto& u : segmentation.units) tokens = std::max(tokens, u.end);
  if (saliency.size() != tokens) {
    throw Error(Errc::ProtocolError, "saliency length " + std::to_string(saliency.size()) + " != token count " +
                                         std::to_string(tokens));
  }
  for (double s : saliency) {
    if (!std::isfinite(s) || s < 0.0) throw Error(Errc::ProtocolError, "saliency entries must be finite and >= 0");
  }

  PositionDistribution out;
  const double eps = kSaliencySmoothing * std::max(1.0, kernels::max_value(saliency));
  out.token_probs.assign(saliency.begin(), saliency.end());
  for (double& p : out.token_probs) p += eps;
  const double total = kernels::sum(out.token_probs);
  if (total > 0.0) kernels::scale(out.token_probs, 1.0 / total);

  out.unit_probs.reserve(segmentation.size());
  for (const auto& u : segmentation.units) {
    double mass = 0.0;
    for (std::size_t i = u.start; i < u.end; ++i) mass += out.token_probs[i];
    out.unit_probs.push_back(mass);
  }
  out.gap_probs.assign(segmentation.size() + 1, 1.0 / static_cast<double>(segmentation.size() + 1));
  return out;
}

PositionDistribution position_distribution(const EditState& state, const SaliencyModel& saliency) {
  const auto s = saliency.token_saliency(state.current(), state.evidence());
  return position_distribution(state.segmentation(), s);
}

// ---------------------------------------------------------------------------
// Content distributions

TokenSequence MaskedSequence::filled(const TokenSequence& content) const {
  std::vector<std::string> out;
  out.reserve(left.size() + content.size() + right.size());
  out.insert(out.end(), left.begin(), left.end());
  out.insert(out.end(), content.begin(), content.end());
  out.insert(out.end(), right.begin(), right.end());
  return TokenSequence(std::move(out));
}

std::vector<std::string> MaskedSequence::marked_tokens() const {
  std::vector<std::string> out(left.begin(), left.end());
  out.emplace_back(kMask);
  out.insert(out.end(), right.begin(), right.end());
  return out;
}

double TokenDistribution::prob_of(std::string_view token) const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == token) return probs[i];
  }
  return 0.0;
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> out(scores.begin(), scores.end());
  if (out.empty()) return out;
  const double top = kernels::max_value(out);
  for (double& v : out) v = std::exp(v - top);
  kernels::scale(out, 1.0 / kernels::sum(out));
  return out;
}

double NGramProposer::window_score(const TokenSequence& filled, std::size_t begin, std::size_t end) const {
  return model_->window_logprob(filled, begin, end);
}

TokenDistribution NGramProposer::token_dist(const MaskedSequence& masked, const EvidenceSet& evidence) const {
  const std::size_t reach = model_->order() - 1;
  const std::size_t m = masked.left.size();
  const std::size_t begin = m > reach ? m - reach : 0;
  TokenDistribution dist;
  dist.tokens = model_->vocabulary();
  std::vector<double> scores;
  scores.reserve(dist.tokens.size());
  for (const auto& w : dist.tokens) {
    const TokenSequence filled = masked.filled(TokenSequence{w});
    double score = window_score(filled, begin, m + 1 + reach);
    if (evidence.mentions(w)) score += options_.copy_bonus;
    scores.push_back(score);
  }
  dist.probs = softmax(scores);
  return dist;
}

std::vector<double> NGramProposer::entity_scores(const MaskedSequence& masked, const EvidenceSet& evidence,
                                                 std::span<const TokenSequence> candidates) const {
  const std::size_t reach = model_->order() - 1;
  const std::size_t m = masked.left.size();
  const std::size_t begin = m > reach ? m - reach : 0;
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    const TokenSequence filled = masked.filled(c);
    const std::size_t end = std::min(filled.size(), m + c.size() + reach);
    // Per candidate token; the window also holds the context factors the fill changes.
    double score = window_score(filled, begin, end) / static_cast<double>(std::max<std::size_t>(c.size(), 1));
    if (evidence.contains_span(c)) score += options_.copy_bonus;
    scores.push_back(score);
  }
  return scores;
}

UniformProposer::UniformProposer(std::vector<std::string> vocabulary) : vocab_(std::move(vocabulary)) {
  std::sort(vocab_.begin(), vocab_.end());
  vocab_.erase(std::unique(vocab_.begin(), vocab_.end()), vocab_.end());
}

TokenDistribution UniformProposer::token_dist(const MaskedSequence&, const EvidenceSet&) const {
  TokenDistribution d;
  d.tokens = vocab_;
  d.probs.assign(vocab_.size(), vocab_.empty() ? 0.0 : 1.0 / static_cast<double>(vocab_.size()));
  return d;
}

std::vector<double> UniformProposer::entity_scores(const MaskedSequence&, const EvidenceSet&,
                                                   std::span<const TokenSequence> candidates) const {
  return std::vector<double>(candidates.size(), 0.0);
}

// ---------------------------------------------------------------------------
// StateView

std::string_view to_string(KernelMutation m) {
  switch (m) {
    case KernelMutation::None:
      return "none";
    case KernelMutation::CorruptReverse:
      return "corrupt-reverse";
    case KernelMutation::DropAlpha:
      return "drop-alpha";
    case KernelMutation::StaleReversePosition:
      return "stale-reverse-position";
  }
  return "?";
}

std::string_view to_string(ProposalStatus s) {
  switch (s) {
    case ProposalStatus::Ok:
      return "ok";
    case ProposalStatus::EmptyResult:
      return "empty-result";
    case ProposalStatus::NoCandidates:
      return "no-candidates";
    case ProposalStatus::Irreversible:
      return "irreversible";
    case ProposalStatus::LengthBound:
      return "length-bound";
    case ProposalStatus::ActionDisabled:
      return "action-disabled";
    case ProposalStatus::Unreachable:
      return "unreachable";
  }
  return "?";
}

StateView::StateView(EditState state, const KernelContext& ctx) : state_(std::move(state)), ctx_(&ctx) {}

const PositionDistribution& StateView::positions() const {
  if (!positions_) positions_ = position_distribution(state_, *ctx_->saliency);
  return *positions_;
}

MaskedSequence StateView::mask(std::size_t unit_begin, std::size_t unit_end) const {
  const auto& seq = state_.current();
  return MaskedSequence{seq.slice(0, state_.gap_offset(unit_begin)), seq.slice(state_.gap_offset(unit_end), seq.size())};
}

const TokenDistribution& StateView::token_dist(std::size_t unit_begin, std::size_t unit_end) const {
  const auto key = std::make_pair(unit_begin, unit_end);
  auto it = token_cache_.find(key);
  if (it != token_cache_.end()) return it->second;
  TokenDistribution d = ctx_->proposer->token_dist(mask(unit_begin, unit_end), state_.evidence());
  if (d.tokens.size() != d.probs.size()) throw Error(Errc::ProtocolError, "token distribution size mismatch");
  return token_cache_.emplace(key, std::move(d)).first->second;
}

const std::vector<double>& StateView::entity_probs(std::size_t unit_begin, std::size_t unit_end) const {
  const auto key = std::make_pair(unit_begin, unit_end);
  auto it = entity_cache_.find(key);
  if (it != entity_cache_.end()) return it->second;
  std::vector<double> probs;
  if (!candidates().empty()) {
    const auto scores = ctx_->proposer->entity_scores(mask(unit_begin, unit_end), state_.evidence(), candidates());
    if (scores.size() != candidates().size()) throw Error(Errc::ProtocolError, "entity score count mismatch");
    for (double s : scores) {
      if (!std::isfinite(s)) throw Error(Errc::ProtocolError, "entity scores must be finite");
    }
    probs = softmax(scores);
  }
  return entity_cache_.emplace(key, std::move(probs)).first->second;
}

double StateView::insert_entity_weight() const { return candidates().empty() ? 0.0 : ctx_->config.alpha; }

double StateView::replace_content_prob(std::size_t unit, const TokenSequence& content) const {
  const Span& span = state_.segmentation()[unit];
  if (span.is_entity()) {
    const std::size_t idx = candidate_index(candidates(), content);
    if (idx == candidates().size()) return 0.0;
    return entity_probs(unit, unit + 1)[idx];
  }
  if (content.size() != 1) return 0.0;
  return token_dist(unit, unit + 1).prob_of(content[0]);
}

double StateView::insert_content_prob(std::size_t gap, const TokenSequence& content, Space space) const {
  const double weight = insert_entity_weight();
  if (space == Space::Entity) {
    const std::size_t idx = candidate_index(candidates(), content);
    if (idx == candidates().size() || weight == 0.0) return 0.0;
    return weight * entity_probs(gap, gap)[idx];
  }
  if (content.size() != 1) return 0.0;
  return (1.0 - weight) * token_dist(gap, gap).prob_of(content[0]);
}

// ---------------------------------------------------------------------------
// Moves

double action_logprob(const StateView& view, const EditAction& action) {
  const auto& pos = view.positions();
  const double log_action = std::log(kActionProb);
  switch (action.kind) {
    case EditKind::Delete:
      return safe_log(pos.unit_probs.at(action.unit_index)) + log_action;
    case EditKind::Replace:
      return safe_log(pos.unit_probs.at(action.unit_index)) + log_action +
             safe_log(view.replace_content_prob(action.unit_index, *action.content));
    case EditKind::Insert: {
      double p3 = view.insert_content_prob(action.unit_index, *action.content, action.space);
      if (view.context().config.mutation == KernelMutation::DropAlpha && p3 > 0.0) {
        const double w = view.insert_entity_weight();
        p3 /= action.space == Space::Entity ? w : 1.0 - w;
      }
      return safe_log(pos.gap_probs.at(action.unit_index)) + log_action + safe_log(p3);
    }
  }
  return kNegInf;
}

Proposal make_proposal(const StateView& view, const EditAction& action) {
  const KernelConfig& config = view.context().config;
  const EditState& x = view.state();
  const std::size_t units = x.unit_count();

  if (!config.allows(action.kind)) return rejected(action, ProposalStatus::ActionDisabled);
  if (action.kind == EditKind::Insert ? action.unit_index > units : action.unit_index >= units) {
    throw Error(Errc::InvalidAction, "position out of range");
  }
  if ((action.kind == EditKind::Delete) == action.content.has_value()) {
    throw Error(Errc::InvalidAction, "content must be present iff the action is not a deletion");
  }
  if (action.content && action.content->empty()) throw Error(Errc::InvalidAction, "empty content");
  if (action.kind == EditKind::Delete && units == 1) return rejected(action, ProposalStatus::EmptyResult);

  const bool unit_is_entity = action.kind != EditKind::Insert && x.segmentation()[action.unit_index].is_entity();
  if (action.kind == EditKind::Replace && unit_is_entity != (action.space == Space::Entity)) {
    return rejected(action, ProposalStatus::NoCandidates);
  }

  const std::size_t removed = action.kind == EditKind::Insert ? 0 : x.segmentation()[action.unit_index].size();
  const std::size_t added = action.content ? action.content->size() : 0;
  const std::size_t next_len = x.current().size() - removed + added;
  if (next_len < config.min_tokens || (config.max_tokens > 0 && next_len > config.max_tokens)) {
    return rejected(action, ProposalStatus::LengthBound);
  }

  const double forward = action_logprob(view, action);
  if (!std::isfinite(forward)) return rejected(action, ProposalStatus::Unreachable);

  EditState next = apply_edit(x, action);
  const std::size_t offset = x.gap_offset(action.unit_index);
  const Space old_space = unit_is_entity ? Space::Entity : Space::Token;

  // Locate the partner move on x'.
  EditAction reverse;
  switch (action.kind) {
    case EditKind::Delete: {
      const auto gap = next.gap_at_offset(offset);
      if (!gap) return rejected(action, ProposalStatus::Irreversible);
      reverse = EditAction{EditKind::Insert, *gap, x.unit_tokens(action.unit_index), old_space};
      break;
    }
    case EditKind::Insert:
    case EditKind::Replace: {
      const auto unit = next.unit_with_span(offset, offset + added);
      if (!unit) return rejected(action, ProposalStatus::Irreversible);
      const bool lands_as_entity = next.segmentation()[*unit].is_entity();
      if (lands_as_entity != (action.space == Space::Entity)) return rejected(action, ProposalStatus::Irreversible);
      if (action.kind == EditKind::Insert) {
        reverse = EditAction{EditKind::Delete, *unit, std::nullopt, Space::Token};
      } else {
        reverse = EditAction{EditKind::Replace, *unit, x.unit_tokens(action.unit_index), old_space};
      }
      break;
    }
  }

  const StateView after(next, view.context());
  const auto& pos_after = after.positions();
  const double log_action = std::log(kActionProb);
  double reverse_position = 0.0;
  double reverse_content = 0.0;
  switch (reverse.kind) {
    case EditKind::Insert:
      reverse_position = safe_log(pos_after.gap_probs[reverse.unit_index]);
      reverse_content = safe_log(after.insert_content_prob(reverse.unit_index, *reverse.content, reverse.space));
      break;
    case EditKind::Delete:
      reverse_position = safe_log(pos_after.unit_probs[reverse.unit_index]);
      break;
    case EditKind::Replace:
      reverse_position = safe_log(pos_after.unit_probs[reverse.unit_index]);
      reverse_content = safe_log(after.replace_content_prob(reverse.unit_index, *reverse.content));
      break;
  }
  if (config.mutation == KernelMutation::StaleReversePosition) {
    const auto& pos = view.positions();
    reverse_position = safe_log(action.kind == EditKind::Insert ? pos.gap_probs[action.unit_index]
                                                                : pos.unit_probs[action.unit_index]);
  }
  double backward = reverse_position + log_action + reverse_content;
  if (config.mutation == KernelMutation::CorruptReverse && action.kind == EditKind::Insert) backward += 0.1;
  if (!std::isfinite(backward)) return rejected(action, ProposalStatus::Irreversible);

  Proposal p;
  p.action = action;
  p.status = ProposalStatus::Ok;
  p.new_state.emplace(std::move(next));
  p.reverse_action = std::move(reverse);
  p.forward_logprob = forward;
  p.reverse_logprob = backward;
  return p;
}

EditKind sample_action(double u) {
  const auto idx = std::min<std::size_t>(2, static_cast<std::size_t>(u * 3.0));
  constexpr EditKind kinds[] = {EditKind::Insert, EditKind::Delete, EditKind::Replace};
  return kinds[idx];
}

Proposal propose_replace(const StateView& view, std::size_t unit, double u_content) {
  const Span& span = view.state().segmentation().units.at(unit);
  if (span.is_entity() && !view.candidates().empty()) {
    const auto& probs = view.entity_probs(unit, unit + 1);
    const std::size_t idx = sample_index(probs, u_content);
    return make_proposal(view, EditAction{EditKind::Replace, unit, view.candidates()[idx], Space::Entity});
  }
  // Token unit, or an entity unit with no entity space to draw from.
  const auto& dist = view.token_dist(unit, unit + 1);
  if (dist.tokens.empty()) return rejected(EditAction{EditKind::Replace, unit, std::nullopt, Space::Token},
                                           ProposalStatus::NoCandidates);
  const std::size_t idx = sample_index(dist.probs, u_content);
  return make_proposal(view, EditAction{EditKind::Replace, unit, TokenSequence{dist.tokens[idx]}, Space::Token});
}

Proposal propose_insert(const StateView& view, std::size_t gap, double u_branch, double u_content) {
  if (u_branch < view.insert_entity_weight()) {
    const auto& probs = view.entity_probs(gap, gap);
    const std::size_t idx = sample_index(probs, u_content);
    return make_proposal(view, EditAction{EditKind::Insert, gap, view.candidates()[idx], Space::Entity});
  }
  const auto& dist = view.token_dist(gap, gap);
  if (dist.tokens.empty()) return rejected(EditAction{EditKind::Insert, gap, std::nullopt, Space::Token},
                                           ProposalStatus::NoCandidates);
  const std::size_t idx = sample_index(dist.probs, u_content);
  return make_proposal(view, EditAction{EditKind::Insert, gap, TokenSequence{dist.tokens[idx]}, Space::Token});
}

Proposal propose_delete(const StateView& view, std::size_t unit) {
  return make_proposal(view, EditAction{EditKind::Delete, unit, std::nullopt, Space::Token});
}

Proposal propose(const StateView& view, const ProposalDraws& draws) {
  const EditKind kind = sample_action(draws.action);
  if (!view.context().config.allows(kind)) {
    return rejected(EditAction{kind, 0, std::nullopt, Space::Token}, ProposalStatus::ActionDisabled);
  }
  const auto& pos = view.positions();
  switch (kind) {
    case EditKind::Insert:
      return propose_insert(view, sample_index(pos.gap_probs, draws.position), draws.branch, draws.content);
    case EditKind::Delete:
      return propose_delete(view, sample_index(pos.unit_probs, draws.position));
    case EditKind::Replace:
      return propose_replace(view, sample_index(pos.unit_probs, draws.position), draws.content);
  }
  return rejected(EditAction{kind, 0, std::nullopt, Space::Token}, ProposalStatus::ActionDisabled);
}

}  // namespace factedit
