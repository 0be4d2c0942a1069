#include <pthread.h>
#include <signal.h>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "convo/error.hpp"
#include "convo/llm_client.hpp"
#include "convo/pipeline.hpp"
#include "convo/synthkit.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string input;
  std::string out;
  std::vector<std::string> terms;
  std::optional<int> top_k;
  std::string stage;
  bool resume = false;
  std::string llm_endpoint;
  std::string mock_llm;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_stage) {
  cmd->add_option("--config", f.config, "Run configuration file (JSON)");
  cmd->add_option("--input", f.input, "Input corpus (JSONL); overrides the config");
  cmd->add_option("--out", f.out, "Output directory; overrides the config");
  cmd->add_option("--terms", f.terms, "Terms of interest (hashtags or words)")->delimiter(',');
  cmd->add_option("--top-k", f.top_k, "Influencers per convo (default 10)")->check(CLI::PositiveNumber);
  if (with_stage) cmd->add_option("--stage", f.stage, "Last stage to run");
  cmd->add_flag("--resume", f.resume, "Reuse cached stages whose inputs are unchanged");
  cmd->add_option("--llm-endpoint", f.llm_endpoint, "Chat-completions URL; overrides the config");
  cmd->add_option("--mock-llm", f.mock_llm, "Serve LLM replies from this mock script");
  cmd->add_option("--seed", f.seed, "Seed for every stochastic stage");
  cmd->add_flag("-v,--verbose", f.verbose, "Log stage progress");
}

convo::PipelineConfig build_config(const CommonFlags& f) {
  convo::PipelineConfig cfg;
  if (!f.config.empty()) {
    cfg = convo::PipelineConfig::load(f.config);
  } else {
    cfg.apply_env();
  }
  if (!f.input.empty()) cfg.input = f.input;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.terms.empty()) cfg.terms = f.terms;
  if (f.top_k) cfg.top_k = *f.top_k;
  if (!f.llm_endpoint.empty()) cfg.llm.endpoint = f.llm_endpoint;
  if (!f.mock_llm.empty()) cfg.mock_llm = f.mock_llm;
  if (f.seed) cfg.seed = *f.seed;
  return cfg;
}

int run(const CommonFlags& f, convo::Stage last) {
  if (f.verbose) convo::log::level() = convo::log::Level::kInfo;
  convo::RunOptions opts;
  opts.last = last;
  opts.resume = f.resume;
  if (!f.stage.empty()) {
    const auto s = convo::parse_stage(f.stage);
    if (!s) throw convo::Error("unknown stage '" + f.stage + "'");
    opts.last = *s;
  }
  const convo::RunOutcome out = convo::run_pipeline(build_config(f), opts);
  std::cout << "report: " << out.report_path.string() << '\n';
  for (const auto& g : out.graph_files) std::cout << "graph: " << g.string() << '\n';
  if (!out.loaded.empty()) {
    std::cout << "restored:";
    for (const auto& s : out.loaded) std::cout << ' ' << s;
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extract convos from a social-media corpus, network their influencers and characterize their messages"};
  app.require_subcommand(1);

  CommonFlags flags;
  struct StageCommand {
    const char* name;
    convo::Stage last;
    const char* help;
  };
  const std::vector<StageCommand> stage_commands = {
      {"ingest", convo::Stage::kIngest, "Parse, resolve and filter the corpus"},
      {"groups", convo::Stage::kGroups, "Build hashtag groups (or LDA topic groups)"},
      {"convo", convo::Stage::kConvo, "Select convos for the terms of interest"},
      {"influencers", convo::Stage::kInfluencers, "Rank top influencers per convo"},
      {"network", convo::Stage::kNetwork, "Build influencer networks and coordination metrics"},
      {"clusters", convo::Stage::kClusters, "Cluster influencer messages"},
      {"characterize", convo::Stage::kCharacterize, "Run the LLM prompt chain on each cluster"},
      {"report", convo::Stage::kReport, "Run every stage and write the report"},
  };
  std::vector<std::pair<CLI::App*, convo::Stage>> stage_apps;
  for (const auto& sc : stage_commands) {
    CLI::App* cmd = app.add_subcommand(sc.name, sc.help);
    add_common(cmd, flags, false);
    stage_apps.emplace_back(cmd, sc.last);
  }
  CLI::App* run_cmd = app.add_subcommand("run", "Run the full pipeline (or up to --stage)");
  add_common(run_cmd, flags, true);

  CLI::App* synth_cmd = app.add_subcommand("synth", "Write a planted synthetic corpus plus its ground truth");
  std::string synth_spec, synth_out;
  std::optional<std::uint64_t> synth_seed;
  int clique = -1;
  int organic = -1;
  synth_cmd->add_option("--spec", synth_spec, "Planted-corpus parameters (JSON)");
  synth_cmd->add_option("--out", synth_out, "Output corpus path (.jsonl)")->required();
  synth_cmd->add_option("--seed", synth_seed, "Generator seed");
  synth_cmd->add_option("--clique", clique, "Planted clique size");
  synth_cmd->add_option("--organic", organic, "Retweet-only audience size");

  CLI::App* mock_cmd = app.add_subcommand("mock-llm", "Serve a scripted chat-completions endpoint until interrupted");
  std::string mock_script;
  int mock_port = 8080;
  mock_cmd->add_option("script", mock_script, "Mock script (JSON)")->required();
  mock_cmd->add_option("--port", mock_port, "Listen port on 127.0.0.1");

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [cmd, last] : stage_apps) {
      if (cmd->parsed()) return run(flags, last);
    }
    if (run_cmd->parsed()) return run(flags, convo::Stage::kReport);
    if (synth_cmd->parsed()) {
      convo::PlantSpec spec;
      if (!synth_spec.empty()) spec = convo::PlantSpec::from_json(nlohmann::json::parse(convo::read_file(synth_spec)));
      if (synth_seed) spec.seed = *synth_seed;
      if (clique >= 0) spec.operation.clique_size = clique;
      if (organic >= 0) spec.operation.organic_authors = organic;
      const convo::SynthCorpus synth = convo::synth_corpus(spec);
      convo::write_synth(synth, synth_out);
      std::cout << "corpus: " << synth_out << " (" << synth.corpus.messages.size() << " messages)\n";
      return 0;
    }
    if (mock_cmd->parsed()) {
      // Block the stop signals before the server threads start so only sigwait sees them.
      sigset_t stop_signals;
      sigemptyset(&stop_signals);
      sigaddset(&stop_signals, SIGINT);
      sigaddset(&stop_signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
      convo::MockLlmServer server(convo::MockScript::load(mock_script), mock_port);
      std::cout << "serving " << server.chat_url() << std::endl;
      int sig = 0;
      sigwait(&stop_signals, &sig);
      server.stop();
      std::cout << "served " << server.request_count() << " requests\n";
      return 0;
    }
  } catch (const convo::Error& e) {
    std::cerr << "error";
    if (!e.stage().empty()) std::cerr << " [" << e.stage() << "]";
    std::cerr << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
