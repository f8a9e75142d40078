#include "factedit/cli_io.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "factedit/remote.hpp"

namespace factedit {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Instances

ClaimInstance parse_instance(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, e.what());
  }
  if (!j.is_object()) throw Error(Errc::ParseError, "record must be an object");

  ClaimInstance inst;
  if (!j.contains("id")) throw Error(Errc::MissingField, "id");
  if (j["id"].is_string()) {
    inst.id = j["id"].get<std::string>();
  } else if (j["id"].is_number_integer()) {
    inst.id = j["id"].dump();
  } else {
    throw Error(Errc::ParseError, "id must be a string or integer");
  }
  if (!j.contains("claim")) throw Error(Errc::MissingField, "claim");
  if (!j["claim"].is_string()) throw Error(Errc::ParseError, "claim must be a string");
  inst.claim = j["claim"].get<std::string>();
  if (TokenSequence::tokenize(inst.claim).empty()) throw Error(Errc::ParseError, "claim is empty");
  if (j.contains("evidence")) {
    if (!j["evidence"].is_array()) throw Error(Errc::ParseError, "evidence must be an array of strings");
    for (const auto& e : j["evidence"]) {
      if (!e.is_string()) throw Error(Errc::ParseError, "evidence must be an array of strings");
      inst.evidence.push_back(e.get<std::string>());
    }
  }
  for (const char* key : {"gold", "label"}) {
    if (!j.contains(key) || j[key].is_null()) continue;
    if (!j[key].is_string()) throw Error(Errc::ParseError, std::string(key) + " must be a string");
    (std::string(key) == "gold" ? inst.gold : inst.label) = j[key].get<std::string>();
  }
  return inst;
}

json instance_json(const ClaimInstance& inst) {
  json j{{"id", inst.id}, {"claim", inst.claim}, {"evidence", inst.evidence}};
  if (inst.gold) j["gold"] = *inst.gold;
  if (inst.label) j["label"] = *inst.label;
  return j;
}

LoadResult read_instances(std::istream& in) {
  LoadResult r;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      r.instances.push_back(parse_instance(line));
    } catch (const Error& e) {
      r.errors.push_back({n, e.code(), e.what()});
    }
  }
  return r;
}

LoadResult load_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return read_instances(in);
}

void write_instances(std::ostream& out, const std::vector<ClaimInstance>& instances) {
  for (const auto& inst : instances) out << instance_json(inst).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Configuration

void RunConfig::validate() const {
  sampler.validate();
  if (scorer == ScorerKind::Remote && endpoint.empty()) throw Error(Errc::InvalidConfig, "remote scorers need --endpoint");
  if (scorer == ScorerKind::Reference && !endpoint.empty()) {
    throw Error(Errc::InvalidConfig, "--endpoint is only valid with --scorer remote");
  }
  if (jobs < 1) throw Error(Errc::InvalidConfig, "jobs must be >= 1");
  if (lm_order < 1) throw Error(Errc::InvalidConfig, "lm-order must be >= 1");
  if (!(lm_smoothing > 0.0)) throw Error(Errc::InvalidConfig, "lm-smoothing must be > 0");
  if (!(verifier.steepness > 0.0) || !std::isfinite(verifier.steepness)) {
    throw Error(Errc::InvalidConfig, "verifier-steepness must be > 0");
  }
  if (!std::isfinite(verifier.midpoint)) throw Error(Errc::InvalidConfig, "verifier-midpoint must be finite");
  if (sari_max_n < 1) throw Error(Errc::InvalidConfig, "sari-max-n must be >= 1");
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw Error(Errc::InvalidConfig, key + ": not a number: '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(Errc::InvalidConfig, key + ": expected true or false");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_option(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "iterations") {
    const auto v = parse_number<long long>(key, value);
    if (v < 1) throw Error(Errc::InvalidConfig, "iterations must be >= 1");
    c.sampler.iterations = static_cast<std::size_t>(v);
  } else if (key == "seed") {
    c.sampler.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "alpha") {
    c.sampler.alpha = parse_number<double>(key, value);
  } else if (key == "weights") {
    std::vector<double> w;
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) w.push_back(parse_number<double>(key, trim(part)));
    if (w.size() != 3) throw Error(Errc::InvalidConfig, "weights: expected w_lm,w_v,w_h");
    c.sampler.weights = {w[0], w[1], w[2]};
    c.sampler.weights.validate();
  } else if (key == "scorer") {
    if (value == "reference") {
      c.scorer = ScorerKind::Reference;
    } else if (value == "remote") {
      c.scorer = ScorerKind::Remote;
    } else {
      throw Error(Errc::InvalidConfig, "scorer must be reference or remote");
    }
  } else if (key == "endpoint") {
    c.endpoint = value;
  } else if (key == "gazetteer") {
    c.gazetteer_path = value;
  } else if (key == "lm-corpus") {
    c.lm_corpus = value;
  } else if (key == "lm-order") {
    c.lm_order = parse_number<std::size_t>(key, value);
  } else if (key == "lm-smoothing") {
    c.lm_smoothing = parse_number<double>(key, value);
  } else if (key == "positions") {
    if (value == "saliency") {
      c.uniform_positions = false;
    } else if (value == "uniform") {
      c.uniform_positions = true;
    } else {
      throw Error(Errc::InvalidConfig, "positions must be 'saliency' or 'uniform'");
    }
  } else if (key == "verifier-steepness") {
    c.verifier.steepness = parse_number<double>(key, value);
  } else if (key == "verifier-midpoint") {
    c.verifier.midpoint = parse_number<double>(key, value);
  } else if (key == "jobs") {
    c.jobs = parse_number<std::size_t>(key, value);
  } else if (key == "trace") {
    c.trace_path = value;
  } else if (key == "timeout-ms") {
    c.timeout = std::chrono::milliseconds(parse_number<long long>(key, value));
  } else if (key == "include-initial") {
    c.sampler.include_initial_in_ranking = parse_bool(key, value);
  } else if (key == "max-tokens") {
    c.sampler.kernel.max_tokens = parse_number<std::size_t>(key, value);
  } else if (key == "sari-max-n") {
    c.sari_max_n = parse_number<std::size_t>(key, value);
  } else {
    throw Error(Errc::InvalidConfig, "unknown option '" + key + "'");
  }
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::ParseError, path + ":" + std::to_string(n) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(Errc::ParseError, path + ":" + std::to_string(n) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::vector<TokenSequence> read_gazetteer_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  std::vector<TokenSequence> out;
  std::string line;
  while (std::getline(in, line)) {
    auto seq = TokenSequence::tokenize(line);
    if (!seq.empty()) out.push_back(std::move(seq));
  }
  return out;
}

std::uint64_t instance_seed(std::uint64_t seed, const std::string& id) { return Rng::derive_seed(seed, id); }

// ---------------------------------------------------------------------------
// Reference pipeline

namespace {

NGramMLM train_instance_lm(const std::vector<TokenSequence>& passages, const TokenSequence& claim,
                           const EvidenceSet& evidence, const std::vector<TokenSequence>& background,
                           NGramMLM::Options options) {
  std::vector<TokenSequence> corpus = passages;
  corpus.insert(corpus.end(), background.begin(), background.end());
  std::vector<TokenSequence> extra{claim};
  const auto& entities = evidence.gazetteer().entries();
  extra.insert(extra.end(), entities.begin(), entities.end());
  return NGramMLM::train(corpus, extra, options);
}

}  // namespace

ReferenceScorers::ReferenceScorers(const std::vector<TokenSequence>& passages, const TokenSequence& claim,
                                   const EvidenceSet& evidence, const std::vector<TokenSequence>& background,
                                   NGramMLM::Options lm_options, LexicalVerifier::Options verifier_options,
                                   bool uniform_positions)
    : lm_(train_instance_lm(passages, claim, evidence, background, lm_options)),
      verifier_(verifier_options),
      saliency_(verifier_),
      proposer_(lm_),
      uniform_positions_(uniform_positions) {}

std::shared_ptr<const EvidenceSet> instance_evidence(const ClaimInstance& inst,
                                                     const std::vector<TokenSequence>& extra_entities) {
  std::vector<TokenSequence> passages;
  for (const auto& e : inst.evidence) {
    auto seq = TokenSequence::tokenize(e);
    if (!seq.empty()) passages.push_back(std::move(seq));
  }
  return std::make_shared<const EvidenceSet>(
      EvidenceSet::build(std::move(passages), TokenSequence::tokenize(inst.claim), extra_entities));
}

// ---------------------------------------------------------------------------
// Records

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json energy_json(const EnergyBreakdown& e) {
  return json{{"lm", e.lm}, {"v", e.v}, {"h", e.h}, {"total", e.total}};
}

json output_record(const std::string& id, const CorrectionResult& r) {
  return json{{"id", id},
              {"corrected", r.best.text()},
              {"energy", energy_json(r.best_energy)},
              {"iterations_run", r.iterations_run},
              {"accepted_count", r.accepted_count}};
}

json trace_header() { return json{{"schema", "factedit-trace"}, {"version", 1}}; }

json trace_record_json(const std::string& id, const TraceRecord& rec) {
  json j{{"id", id},
         {"iteration", rec.iteration},
         {"action", to_string(rec.action.kind)},
         {"unit", rec.action.unit_index},
         {"content", rec.action.content ? json(rec.action.content->text()) : json(nullptr)},
         {"space", to_string(rec.action.space)},
         {"status", to_string(rec.status)},
         {"proposal", rec.proposal ? json(rec.proposal->text()) : json(nullptr)},
         {"e_old", energy_json(rec.e_old)},
         {"e_new", rec.e_new ? energy_json(*rec.e_new) : json(nullptr)},
         {"forward_logprob", finite_or_null(rec.forward_logprob)},
         {"reverse_logprob", finite_or_null(rec.reverse_logprob)},
         {"acceptance", rec.acceptance},
         {"u", rec.u},
         {"accepted", rec.accepted},
         {"draws", rec.draws}};
  return j;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::Timeout:
    case Errc::ProtocolError:
    case Errc::RemoteFailure:
      return kExitTransport;
    case Errc::InvalidConfig:
      return kExitUsage;
    default:
      return kExitData;
  }
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct InstanceOutput {
  std::string record;
  std::vector<std::string> trace;
  std::optional<Error> error;
};

class ChainScorers {
 public:
  virtual ~ChainScorers() = default;
  virtual Scorers scorers() const = 0;
};

class ReferenceChain final : public ChainScorers {
 public:
  ReferenceChain(const ClaimInstance& inst, const EvidenceSet& evidence, const std::vector<TokenSequence>& background,
                 const RunConfig& config)
      : ref_(evidence.passages(), TokenSequence::tokenize(inst.claim), evidence, background,
             NGramMLM::Options{config.lm_order, config.lm_smoothing}, config.verifier, config.uniform_positions) {}
  Scorers scorers() const override { return ref_.scorers(); }

 private:
  ReferenceScorers ref_;
};

class RemoteChain final : public ChainScorers {
 public:
  explicit RemoteChain(RemoteClient& client)
      : fluency_(client), verifier_(client), saliency_(client), proposer_(client) {}
  Scorers scorers() const override { return {&fluency_, &verifier_, &saliency_, &proposer_}; }

 private:
  RemoteFluency fluency_;
  RemoteVerifier verifier_;
  RemoteSaliency saliency_;
  RemoteProposer proposer_;
};

InstanceOutput correct_one(const ClaimInstance& inst, const RunConfig& config,
                           const std::vector<TokenSequence>& entities, const std::vector<TokenSequence>& background,
                           RemoteClient* client) {
  InstanceOutput out;
  try {
    const auto evidence = instance_evidence(inst, entities);
    std::unique_ptr<ChainScorers> chain;
    if (client != nullptr) {
      chain = std::make_unique<RemoteChain>(*client);
    } else {
      chain = std::make_unique<ReferenceChain>(inst, *evidence, background, config);
    }
    SamplerConfig sampler = config.sampler;
    sampler.seed = instance_seed(config.sampler.seed, inst.id);
    const auto result = run(TokenSequence::tokenize(inst.claim), evidence, chain->scorers(), sampler);
    out.record = output_record(inst.id, result).dump();
    if (!config.trace_path.empty()) {
      for (const auto& rec : result.trace) out.trace.push_back(trace_record_json(inst.id, rec).dump());
    }
  } catch (const Error& e) {
    out.error = e;
  }
  return out;
}

}  // namespace

CorrectionResult correct_instance(const ClaimInstance& inst, const RunConfig& config,
                                  const std::vector<TokenSequence>& entities,
                                  const std::vector<TokenSequence>& background) {
  const auto evidence = instance_evidence(inst, entities);
  const ReferenceChain chain(inst, *evidence, background, config);
  SamplerConfig sampler = config.sampler;
  sampler.seed = instance_seed(config.sampler.seed, inst.id);
  return run(TokenSequence::tokenize(inst.claim), evidence, chain.scorers(), sampler);
}

int correct_command(const RunConfig& config, const std::string& input, const std::string& output, std::ostream& out,
                    std::ostream& err) {
  try {
    config.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  LoadResult loaded;
  std::vector<TokenSequence> entities, background;
  try {
    loaded = load_instances(input);
    if (!config.gazetteer_path.empty()) entities = read_gazetteer_file(config.gazetteer_path);
    if (!config.lm_corpus.empty()) background = read_gazetteer_file(config.lm_corpus);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  int status = kExitOk;
  for (const auto& le : loaded.errors) {
    err << input << ":" << le.line << ": " << le.message << '\n';
    status = kExitData;
  }
  {
    std::set<std::string> seen;
    for (const auto& inst : loaded.instances) {
      if (!seen.insert(inst.id).second) {
        err << "error: duplicate instance id '" << inst.id << "'\n";
        return kExitData;
      }
    }
  }

  const auto& instances = loaded.instances;
  std::vector<InstanceOutput> results(instances.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> transport_failed{false};
  auto worker = [&] {
    std::unique_ptr<RemoteClient> client;
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= instances.size() || transport_failed) return;
      if (config.scorer == ScorerKind::Remote && !client) {
        try {
          client = std::make_unique<RemoteClient>(open_transport(config.endpoint), config.timeout);
        } catch (const Error& e) {
          results[i].error = e;
          transport_failed = true;
          return;
        }
      }
      results[i] = correct_one(instances[i], config, entities, background, client.get());
      if (results[i].error && exit_code_for(results[i].error->code()) == kExitTransport) {
        transport_failed = true;
        return;
      }
    }
  };
  const std::size_t jobs = std::min(config.jobs, std::max<std::size_t>(1, instances.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::ofstream file;
  std::ostream* sink = &out;
  if (output != "-") {
    file.open(output, std::ios::binary | std::ios::trunc);
    if (!file) {
      err << "error: cannot write " << output << '\n';
      return kExitData;
    }
    sink = &file;
  }
  std::ofstream trace;
  if (!config.trace_path.empty()) {
    trace.open(config.trace_path, std::ios::binary | std::ios::trunc);
    if (!trace) {
      err << "error: cannot write " << config.trace_path << '\n';
      return kExitData;
    }
    trace << trace_header().dump() << '\n';
  }

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& r = results[i];
    if (r.error) {
      err << "error: instance '" << instances[i].id << "': " << r.error->what() << '\n';
      status = std::max(status, exit_code_for(r.error->code()));
      continue;
    }
    if (r.record.empty()) continue;  // skipped after a transport failure
    *sink << r.record << '\n';
    for (const auto& line : r.trace) trace << line << '\n';
  }
  sink->flush();
  return status;
}

int eval_command(const std::string& outputs, const std::string& gold, const std::string& report_path,
                 const SariOptions& options, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(outputs);
    if (!in) throw Error(Errc::Io, "cannot open " + outputs);
    std::map<std::string, std::string> corrected;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw Error(Errc::ParseError, outputs + ":" + std::to_string(n) + ": " + e.what());
      }
      if (!j.is_object() || !j.contains("id") || !j.contains("corrected") || !j["corrected"].is_string()) {
        throw Error(Errc::MissingField, outputs + ":" + std::to_string(n) + ": needs id and corrected");
      }
      const std::string id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
      corrected[id] = j["corrected"].get<std::string>();
    }

    const LoadResult golds = load_instances(gold);
    if (!golds.errors.empty()) {
      const auto& e = golds.errors.front();
      throw Error(e.code, gold + ":" + std::to_string(e.line) + ": " + e.message);
    }
    std::set<std::string> gold_ids;
    for (const auto& g : golds.instances) gold_ids.insert(g.id);
    std::set<std::string> out_ids;
    for (const auto& [id, text] : corrected) out_ids.insert(id);
    if (gold_ids != out_ids) {
      std::string missing;
      for (const auto& id : gold_ids) {
        if (!out_ids.count(id)) missing += " -" + id;
      }
      for (const auto& id : out_ids) {
        if (!gold_ids.count(id)) missing += " +" + id;
      }
      throw Error(Errc::IdMismatch, "output and gold ids differ:" + missing);
    }

    std::vector<EvalInstance> instances;
    for (const auto& g : golds.instances) {
      instances.push_back(EvalInstance{g.id, TokenSequence::tokenize(g.claim), TokenSequence::tokenize(corrected[g.id]),
                                       {TokenSequence::tokenize(g.gold.value_or(g.claim))}, g.label});
    }
    const CorpusReport report = evaluate_corpus(instances, options);

    out << std::fixed << std::setprecision(4);
    out << "instances      " << report.instances.size() << '\n';
    out << "sari-keep      " << report.mean_sari.keep_f1 << '\n';
    out << "sari-delete    " << report.mean_sari.delete_f1 << '\n';
    out << "sari-add       " << report.mean_sari.add_f1 << '\n';
    out << "sari-final     " << report.mean_sari.final << '\n';
    out << "rouge-2        " << report.mean_rouge2 << '\n';
    out << "hamming        " << report.mean_hamming << '\n';
    out << "exact-match    " << report.exact_match_rate << '\n';
    for (const auto& [label, count] : report.label_counts) {
      out << "label " << (label.empty() ? "(none)" : label) << "  " << count << '\n';
    }

    if (!report_path.empty()) {
      std::ofstream rep(report_path, std::ios::binary | std::ios::trunc);
      if (!rep) throw Error(Errc::Io, "cannot write " + report_path);
      for (const auto& s : report.instances) {
        rep << json{{"id", s.id},
                    {"sari", {{"keep", s.sari.keep_f1}, {"delete", s.sari.delete_f1}, {"add", s.sari.add_f1},
                              {"final", s.sari.final}}},
                    {"rouge2", s.rouge2},
                    {"hamming", s.hamming},
                    {"exact_match", s.exact_match}}
                   .dump()
            << '\n';
      }
      rep << json{{"summary",
                   {{"instances", report.instances.size()},
                    {"sari", {{"keep", report.mean_sari.keep_f1}, {"delete", report.mean_sari.delete_f1},
                              {"add", report.mean_sari.add_f1}, {"final", report.mean_sari.final}}},
                    {"rouge2", report.mean_rouge2},
                    {"hamming", report.mean_hamming},
                    {"exact_match", report.exact_match_rate},
                    {"labels", report.label_counts}}}}
                 .dump()
          << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }
}

int selfcheck_command(const SelfcheckOptions& options, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  SelfcheckReport report;
  try {
    report = run_selfcheck(options);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == Errc::InvalidConfig ? kExitUsage : kExitSelfcheck;
  }
  for (const auto& l : report.lines) {
    out << (l.passed ? "PASS " : "FAIL ") << std::left << std::setw(10) << l.space << std::setw(36) << l.check
        << std::scientific << std::setprecision(3) << l.value << (l.expect_above ? " >  " : " <= ") << l.tolerance
        << '\n';
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << std::fixed << std::setprecision(2) << "selfcheck " << (report.passed() ? "passed" : "FAILED") << " in "
      << secs << " s\n";
  return report.passed() ? kExitOk : kExitSelfcheck;
}

int trace_view_command(const std::string& path, const std::string& id, std::ostream& out, std::ostream& err) {
  std::ifstream in(path);
  if (!in) {
    err << "error: cannot open " << path << '\n';
    return kExitData;
  }
  std::string line;
  if (!std::getline(in, line)) {
    err << "error: empty trace file\n";
    return kExitData;
  }
  try {
    const json header = json::parse(line);
    if (header.value("schema", "") != "factedit-trace" || header.value("version", 0) != 1) {
      err << "error: unsupported trace schema\n";
      return kExitData;
    }
    out << std::left << std::setw(10) << "id" << std::setw(5) << "it" << std::setw(9) << "action" << std::setw(5)
        << "pos" << std::setw(22) << "content" << std::setw(14) << "status" << std::setw(10) << "A" << std::setw(10)
        << "u" << std::setw(4) << "acc" << "proposal\n";
    std::size_t n = 1;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      const json r = json::parse(line);
      const std::string rid = r.at("id").get<std::string>();
      if (!id.empty() && rid != id) continue;
      out << std::left << std::setw(10) << rid << std::setw(5) << r.at("iteration").get<std::size_t>() << std::setw(9)
          << r.at("action").get<std::string>() << std::setw(5) << r.at("unit").get<std::size_t>() << std::setw(22)
          << (r.at("content").is_null() ? "-" : r.at("content").get<std::string>()) << std::setw(14)
          << r.at("status").get<std::string>() << std::setw(10) << std::fixed << std::setprecision(4)
          << r.at("acceptance").get<double>() << std::setw(10) << r.at("u").get<double>() << std::setw(4)
          << (r.at("accepted").get<bool>() ? "y" : "n")
          << (r.at("proposal").is_null() ? "-" : r.at("proposal").get<std::string>()) << '\n';
    }
  } catch (const json::exception& e) {
    err << "error: " << path << ": " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace factedit
