#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "factedit/error.hpp"
#include "factedit/eval_metrics.hpp"
#include "factedit/mh_engine.hpp"
#include "factedit/oracle_harness.hpp"

namespace factedit {

/// One input row.
struct ClaimInstance {
  std::string id;
  std::string claim;
  std::vector<std::string> evidence;
  std::optional<std::string> gold;
  std::optional<std::string> label;

  friend bool operator==(const ClaimInstance&, const ClaimInstance&) = default;
};

/// Throws Error(ParseError) or Error(MissingField).
ClaimInstance parse_instance(const std::string& line);
nlohmann::json instance_json(const ClaimInstance& inst);

struct LineError {
  std::size_t line = 0;
  Errc code = Errc::ParseError;
  std::string message;
};

struct LoadResult {
  std::vector<ClaimInstance> instances;
  std::vector<LineError> errors;
};

/// One instance per non-blank line, order preserved. Bad lines are reported
/// and skipped. Throws Error(Io) if the file cannot be opened.
LoadResult load_instances(const std::string& path);
LoadResult read_instances(std::istream& in);
void write_instances(std::ostream& out, const std::vector<ClaimInstance>& instances);

enum class ScorerKind { Reference, Remote };

struct RunConfig {
  SamplerConfig sampler{};
  ScorerKind scorer = ScorerKind::Reference;
  std::string endpoint;
  /// File of extra entity surface forms, one per line.
  std::string gazetteer_path;
  /// Optional background corpus for the reference n-gram model.
  std::string lm_corpus;
  std::size_t lm_order = 3;
  double lm_smoothing = 0.01;
  /// Reference verifier; stricter than the type defaults so that one
  /// unsupported entity is enough to call a claim refuted.
  LexicalVerifier::Options verifier{20.0, 0.95};
  /// Sample edit positions uniformly instead of by occlusion saliency.
  bool uniform_positions = false;
  std::size_t jobs = 1;
  std::string trace_path;
  std::chrono::milliseconds timeout{30000};
  std::size_t sari_max_n = 4;

  /// Throws Error(InvalidConfig).
  void validate() const;
};

/// Sets one option by its long flag name (without dashes). Throws
/// Error(InvalidConfig) for unknown keys or bad values.
void apply_option(RunConfig& config, const std::string& key, const std::string& value);

/// key = value lines; '#' starts a comment. Throws Error(ParseError) with the
/// line number, or Error(Io).
std::map<std::string, std::string> read_config_file(const std::string& path);

std::vector<TokenSequence> read_gazetteer_file(const std::string& path);

/// Per-instance chain seed from the global seed and the instance id.
std::uint64_t instance_seed(std::uint64_t seed, const std::string& id);

/// Reference scorers built for one instance: the n-gram model is trained on
/// the evidence (plus the background corpus) with the claim and gazetteer
/// tokens in its vocabulary.
class ReferenceScorers {
 public:
  ReferenceScorers(const std::vector<TokenSequence>& passages, const TokenSequence& claim,
                   const EvidenceSet& evidence, const std::vector<TokenSequence>& background,
                   NGramMLM::Options lm_options, LexicalVerifier::Options verifier_options,
                   bool uniform_positions = false);

  Scorers scorers() const {
    return {&lm_, &verifier_, uniform_positions_ ? static_cast<const SaliencyModel*>(&uniform_) : &saliency_,
            &proposer_};
  }
  const NGramMLM& lm() const noexcept { return lm_; }

 private:
  NGramMLM lm_;
  LexicalVerifier verifier_;
  OcclusionSaliency saliency_;
  UniformSaliency uniform_;
  NGramProposer proposer_;
  bool uniform_positions_;
};

/// Evidence for an instance: tokenized passages plus harvested and extra
/// entities.
std::shared_ptr<const EvidenceSet> instance_evidence(const ClaimInstance& inst,
                                                     const std::vector<TokenSequence>& extra_entities);

/// Runs one chain with the reference scorers; the chain seed comes from
/// instance_seed(config.sampler.seed, inst.id).
CorrectionResult correct_instance(const ClaimInstance& inst, const RunConfig& config,
                                  const std::vector<TokenSequence>& entities = {},
                                  const std::vector<TokenSequence>& background = {});

nlohmann::json energy_json(const EnergyBreakdown& e);
nlohmann::json output_record(const std::string& id, const CorrectionResult& r);
nlohmann::json trace_header();
nlohmann::json trace_record_json(const std::string& id, const TraceRecord& rec);

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitTransport = 3, kExitSelfcheck = 4 };

/// Exit code for an error raised while running a command.
int exit_code_for(Errc code);

/// Corrects every instance of `input` and writes one record per line to
/// `output` ("-" for stdout). Diagnostics go to `err`.
int correct_command(const RunConfig& config, const std::string& input, const std::string& output, std::ostream& out,
                    std::ostream& err);

/// Joins outputs ({id, corrected}) with gold instances by id and prints the
/// corpus report. `report_path` (optional) receives the JSON report.
int eval_command(const std::string& outputs, const std::string& gold, const std::string& report_path,
                 const SariOptions& options, std::ostream& out, std::ostream& err);

int selfcheck_command(const SelfcheckOptions& options, std::ostream& out, std::ostream& err);

/// Prints a trace file as a table, optionally for one instance id.
int trace_view_command(const std::string& path, const std::string& id, std::ostream& out, std::ostream& err);

}  // namespace factedit
