// factedit: command-line driver.
//
//   factedit correct --input claims.jsonl --output out.jsonl [--seed S] ...
//   factedit eval --outputs out.jsonl --gold claims.jsonl [--report r.jsonl]
//   factedit selfcheck [--space NAME] [--mutation NAME]
//   factedit trace-view --trace trace.jsonl [--id ID]

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "factedit/cli_io.hpp"

namespace {

using factedit::RunConfig;

// Flags that map onto RunConfig keys; collected so that config-file values
// apply first and command-line values override them.
struct CorrectFlags {
  std::string input;
  std::string output = "-";
  std::string config_file;
  std::map<std::string, std::string> values;
};

factedit::KernelMutation parse_mutation(const std::string& name) {
  using factedit::KernelMutation;
  for (auto m : {KernelMutation::None, KernelMutation::CorruptReverse, KernelMutation::DropAlpha,
                 KernelMutation::StaleReversePosition}) {
    if (factedit::to_string(m) == name) return m;
  }
  throw factedit::Error(factedit::Errc::InvalidConfig, "unknown mutation '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evidence-guided claim correction by Metropolis-Hastings edit sampling"};
  app.require_subcommand(1);

  CorrectFlags cf;
  auto* correct = app.add_subcommand("correct", "Correct each claim of a JSONL file");
  correct->add_option("--input,-i", cf.input, "Input JSONL of claim instances")->required();
  correct->add_option("--output,-o", cf.output, "Output JSONL ('-' for stdout)");
  correct->add_option("--config", cf.config_file, "key = value config file");
  const std::vector<std::pair<std::string, std::string>> keyed = {
      {"iterations", "Sampler iterations (>= 1)"},
      {"seed", "Global seed"},
      {"alpha", "Entity share of insertions"},
      {"weights", "Energy weights w_lm,w_v,w_h"},
      {"scorer", "reference or remote"},
      {"endpoint", "Remote scorer endpoint (tcp://host:port or stdio:command)"},
      {"gazetteer", "File of extra entities, one per line"},
      {"jobs", "Parallel chains"},
      {"trace", "Write per-step trace records here"},
      {"lm-corpus", "Background corpus for the reference n-gram model"},
      {"lm-order", "Reference n-gram order"},
      {"lm-smoothing", "Reference n-gram add-k constant"},
      {"positions", "Edit-position sampling: saliency or uniform"},
      {"verifier-steepness", "Reference verifier sigmoid steepness"},
      {"verifier-midpoint", "Reference verifier coverage midpoint"},
      {"timeout-ms", "Remote scorer timeout"},
      {"include-initial", "Rank the unedited claim with the accepted states"},
      {"max-tokens", "Reject proposals longer than this (0 = no bound)"},
  };
  for (const auto& [key, help] : keyed) {
    correct->add_option_function<std::string>("--" + key, [&cf, key = key](const std::string& v) { cf.values[key] = v; },
                                              help);
  }

  std::string outputs, gold, report;
  std::size_t sari_n = 4;
  auto* eval = app.add_subcommand("eval", "Score corrections against gold instances");
  eval->add_option("--outputs", outputs, "JSONL written by correct")->required();
  eval->add_option("--gold", gold, "Instance JSONL with gold corrections")->required();
  eval->add_option("--report", report, "Write a JSONL report here");
  eval->add_option("--sari-max-n", sari_n, "Highest SARI n-gram order (1 = unigrams)")->check(CLI::Range(1, 8));

  factedit::SelfcheckOptions sc;
  std::string mutation = "none";
  auto* selfcheck = app.add_subcommand("selfcheck", "Verify the transition kernel on built-in toy spaces");
  selfcheck->add_option("--space", sc.space, "Only this space (symmetric, small, full, single)");
  selfcheck->add_option("--mutation", mutation, "Deliberately break the kernel (test hook)");
  selfcheck->add_option("--steps", sc.empirical_steps, "Chain length for the empirical check");
  selfcheck->add_option("--seed", sc.seed, "Seed for the empirical check");

  std::string trace_path, trace_id;
  auto* view = app.add_subcommand("trace-view", "Print a trace file");
  view->add_option("--trace", trace_path, "Trace JSONL")->required();
  view->add_option("--id", trace_id, "Only this instance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? factedit::kExitOk : factedit::kExitUsage;
  }

  try {
    if (*correct) {
      RunConfig config;
      if (!cf.config_file.empty()) {
        for (const auto& [k, v] : factedit::read_config_file(cf.config_file)) factedit::apply_option(config, k, v);
      }
      for (const auto& [k, v] : cf.values) factedit::apply_option(config, k, v);
      // The environment overrides the config file but not --endpoint.
      const char* env = std::getenv("FACTEDIT_ENDPOINT");
      if (env != nullptr && *env != '\0' && !cf.values.count("endpoint") &&
          config.scorer == factedit::ScorerKind::Remote) {
        config.endpoint = env;
      }
      return factedit::correct_command(config, cf.input, cf.output, std::cout, std::cerr);
    }
    if (*eval) {
      return factedit::eval_command(outputs, gold, report, {sari_n}, std::cout, std::cerr);
    }
    if (*selfcheck) {
      sc.mutation = parse_mutation(mutation);
      return factedit::selfcheck_command(sc, std::cout, std::cerr);
    }
    if (*view) return factedit::trace_view_command(trace_path, trace_id, std::cout, std::cerr);
  } catch (const factedit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == factedit::Errc::InvalidConfig || e.code() == factedit::Errc::ParseError
               ? factedit::kExitUsage
               : factedit::exit_code_for(e.code());
  }
  return factedit::kExitUsage;
}
