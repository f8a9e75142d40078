#pragma once

// Transition kernel g(x'|x) = P1(position | x) * P2(action) * P3(content | masked x, action).
//
// Positions are segmentation units (replace, delete) or gaps between units
// (insert). Entities and single tokens live in separate content spaces: an
// entity unit is only ever replaced by another gazetteer entity, a token unit
// by a vocabulary token, and insertion mixes the two spaces with weight alpha.
//
// Every move is paired with the move that undoes it on x':
//   delete unit i       <->  insert the same content at the vacated gap
//   insert c at gap g   <->  delete the unit c occupies in x'
//   replace unit i by c <->  replace the unit c occupies by the old content
// x' is re-segmented, so the partner may not exist (content fused with a
// neighbour into an entity, say). Such moves are reported as Irreversible and
// must be rejected, which keeps the pairing an involution and the chain in
// detailed balance.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "factedit/scorers.hpp"
#include "factedit/text_state.hpp"

namespace factedit {

inline constexpr double kActionProb = 1.0 / 3.0;
inline constexpr double kSaliencySmoothing = 1e-3;

struct PositionDistribution {
  std::vector<double> token_probs;
  std::vector<double> unit_probs;
  std::vector<double> gap_probs;
};

/// Smooths s_i + eps with eps = 1e-3 * max(1, max_j s_j), normalizes over
/// tokens, and sums token mass per unit. Gaps are uniform.
PositionDistribution position_distribution(const Segmentation& segmentation, std::span<const double> saliency);
PositionDistribution position_distribution(const EditState& state, const SaliencyModel& saliency);

/// A claim with one [MASK] between `left` and `right`.
struct MaskedSequence {
  static constexpr std::string_view kMask = "[MASK]";

  TokenSequence left;
  TokenSequence right;

  TokenSequence filled(const TokenSequence& content) const;
  /// Tokens with the literal mask marker in place.
  std::vector<std::string> marked_tokens() const;
};

struct TokenDistribution {
  std::vector<std::string> tokens;
  std::vector<double> probs;

  /// 0 when `token` is absent.
  double prob_of(std::string_view token) const;
};

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> scores);

class Proposer {
 public:
  virtual ~Proposer() = default;
  /// Distribution over single tokens for the mask; sums to 1.
  virtual TokenDistribution token_dist(const MaskedSequence& masked, const EvidenceSet& evidence) const = 0;
  /// Length-normalized log-likelihood of each candidate filling the mask.
  virtual std::vector<double> entity_scores(const MaskedSequence& masked, const EvidenceSet& evidence,
                                            std::span<const TokenSequence> candidates) const = 0;
};

/// Reference proposer: fills the mask with each vocabulary token (or
/// candidate entity) and scores the bidirectional n-gram log-probability of
/// the window the fill touches, plus a bonus for content copied from the
/// evidence.
class NGramProposer final : public Proposer {
 public:
  struct Options {
    double copy_bonus = 1.0;
  };

  explicit NGramProposer(const NGramMLM& model) : model_(&model) {}
  NGramProposer(const NGramMLM& model, Options options) : model_(&model), options_(options) {}

  TokenDistribution token_dist(const MaskedSequence& masked, const EvidenceSet& evidence) const override;
  std::vector<double> entity_scores(const MaskedSequence& masked, const EvidenceSet& evidence,
                                    std::span<const TokenSequence> candidates) const override;

 private:
  double window_score(const TokenSequence& filled, std::size_t begin, std::size_t end) const;

  const NGramMLM* model_;
  Options options_{};
};

/// Uniform over a fixed vocabulary; all candidate entities score equally.
class UniformProposer final : public Proposer {
 public:
  explicit UniformProposer(std::vector<std::string> vocabulary);
  TokenDistribution token_dist(const MaskedSequence&, const EvidenceSet&) const override;
  std::vector<double> entity_scores(const MaskedSequence&, const EvidenceSet&,
                                    std::span<const TokenSequence> candidates) const override;

 private:
  std::vector<std::string> vocab_;
};

/// Deliberate kernel defects, used to prove the oracle harness notices them.
enum class KernelMutation {
  None,
  /// Adds 0.1 to the reverse log-probability of insertions.
  CorruptReverse,
  /// Leaves the alpha mixture weight out of the insertion forward probability.
  DropAlpha,
  /// Reuses the forward position probability for the reverse move instead of
  /// recomputing P1 on x'.
  StaleReversePosition,
};

std::string_view to_string(KernelMutation m);

struct KernelConfig {
  double alpha = 0.5;
  /// Proposals outside [min_tokens, max_tokens] are rejected; max 0 = none.
  std::size_t min_tokens = 1;
  std::size_t max_tokens = 0;
  /// Indexed by EditKind. A disabled action keeps its 1/3 mass as rejection.
  std::array<bool, 3> enabled{true, true, true};
  KernelMutation mutation = KernelMutation::None;

  bool allows(EditKind kind) const { return enabled[static_cast<std::size_t>(kind)]; }
};

struct KernelContext {
  const SaliencyModel* saliency = nullptr;
  const Proposer* proposer = nullptr;
  KernelConfig config{};
};

/// Lazily computed distributions of one state. Not thread-safe; each chain
/// owns its views.
class StateView {
 public:
  StateView(EditState state, const KernelContext& ctx);

  const EditState& state() const noexcept { return state_; }
  const KernelContext& context() const noexcept { return *ctx_; }

  const PositionDistribution& positions() const;
  /// Mask covering units [unit_begin, unit_end); equal bounds mask a gap.
  MaskedSequence mask(std::size_t unit_begin, std::size_t unit_end) const;
  const TokenDistribution& token_dist(std::size_t unit_begin, std::size_t unit_end) const;
  /// Softmax over the gazetteer entries (index-aligned with entries()).
  const std::vector<double>& entity_probs(std::size_t unit_begin, std::size_t unit_end) const;
  const std::vector<TokenSequence>& candidates() const { return state_.evidence().gazetteer().entries(); }
  /// alpha, or 0 when the entity space is empty.
  double insert_entity_weight() const;

  /// P3 of `content` for an edit at the given units. Zero if unreachable.
  double replace_content_prob(std::size_t unit, const TokenSequence& content) const;
  double insert_content_prob(std::size_t gap, const TokenSequence& content, Space space) const;

 private:
  EditState state_;
  const KernelContext* ctx_;
  mutable std::optional<PositionDistribution> positions_;
  mutable std::map<std::pair<std::size_t, std::size_t>, TokenDistribution> token_cache_;
  mutable std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> entity_cache_;
};

enum class ProposalStatus {
  Ok,
  /// Deleting the only unit.
  EmptyResult,
  /// Entity unit but empty entity space; fell back to a token.
  NoCandidates,
  /// The partner move does not exist in x'.
  Irreversible,
  /// x' falls outside the configured length bounds.
  LengthBound,
  ActionDisabled,
  /// The action has zero forward probability.
  Unreachable,
};

std::string_view to_string(ProposalStatus s);

struct Proposal {
  EditAction action;
  ProposalStatus status = ProposalStatus::Ok;
  std::optional<EditState> new_state;
  std::optional<EditAction> reverse_action;
  /// log g(x'|x) and log g(x|x'); -inf unless status is Ok.
  double forward_logprob = 0.0;
  double reverse_logprob = 0.0;

  bool ok() const noexcept { return status == ProposalStatus::Ok; }
};

/// log g of `action` taken from the viewed state: log P1 + log 1/3 + log P3.
double action_logprob(const StateView& view, const EditAction& action);

/// Builds x' for a given action, checks the partner move, and fills both
/// transition log-probabilities. The reverse side is assembled from the
/// distributions of x' independently of action_logprob.
Proposal make_proposal(const StateView& view, const EditAction& action);

/// Uniform draws consumed by one proposal; always all four, for stable
/// random streams.
struct ProposalDraws {
  double action = 0.0;
  double position = 0.0;
  double branch = 0.0;
  double content = 0.0;
};

EditKind sample_action(double u);
Proposal propose_replace(const StateView& view, std::size_t unit, double u_content);
Proposal propose_insert(const StateView& view, std::size_t gap, double u_branch, double u_content);
Proposal propose_delete(const StateView& view, std::size_t unit);
/// Samples action, position, and content, in that order.
Proposal propose(const StateView& view, const ProposalDraws& draws);

}  // namespace factedit
