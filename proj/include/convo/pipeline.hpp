#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "convo/agenda_llm.hpp"
#include "convo/corpus.hpp"
#include "convo/hashtag_groups.hpp"
#include "convo/influencers.hpp"
#include "convo/lda.hpp"
#include "convo/msg_cluster.hpp"

namespace convo {

enum class Stage { kIngest, kGroups, kConvo, kInfluencers, kNetwork, kClusters, kCharacterize, kReport };

inline constexpr int kStageCount = 8;

const char* stage_name(Stage s);
/// Accepts the stage names plus "groups" for hashtag-groups.
std::optional<Stage> parse_stage(std::string_view name);

struct PipelineConfig {
  std::filesystem::path input;
  SchemaMap schema;
  std::filesystem::path out_dir = "out";
  /// Defaults to out_dir/cache.
  std::filesystem::path cache_dir;
  /// Seeds grouping, LDA and message clustering alike.
  std::uint64_t seed = 42;
  std::vector<std::string> terms;
  int top_k = 10;
  /// "hashtag" (co-occurrence groups) or "lda" (topic groups).
  std::string grouping_method = "hashtag";
  GroupingParams grouping;
  LdaParams lda;
  CoordinationWeights weights;
  double operation_threshold = 0.5;
  EmbeddingConfig embedding;
  ClusterParams clusters;
  LlmConfig llm;
  /// Empty selects the compiled-in templates.
  std::filesystem::path prompts_dir;
  /// Empty selects the compiled-in lexicon.
  std::filesystem::path lexicon;
  /// Mock script served by an in-process endpoint instead of llm.endpoint.
  std::optional<std::filesystem::path> mock_llm;
  /// Adds a wall-clock timestamp to the report (breaks byte-stability).
  bool record_wall_clock = false;

  /// Relative paths resolve against `base_dir`.
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);
  /// CONVO_LLM_ENDPOINT, CONVO_LLM_API_KEY and CONVO_LLM_MODEL override the LLM settings.
  void apply_env();
  void validate() const;
  std::filesystem::path effective_cache_dir() const;
  /// Effective settings without secrets.
  nlohmann::json to_json() const;
  std::uint64_t hash() const;
};

struct RunOptions {
  Stage last = Stage::kReport;
  bool resume = false;
};

struct RunOutcome {
  nlohmann::json report;
  std::filesystem::path report_path;
  std::vector<std::string> computed;  ///< stages run this time
  std::vector<std::string> loaded;    ///< stages restored from cache
  std::vector<std::filesystem::path> graph_files;
};

/// ingest -> hashtag-groups -> convo -> influencers -> network -> clusters ->
/// characterize -> report. Stages after `opts.last` are skipped; the report is
/// always written. A fatal error is rethrown as convo::Error naming the stage;
/// caches of completed stages stay on disk.
RunOutcome run_pipeline(const PipelineConfig& cfg, const RunOptions& opts = {});

/// Message text handed to embedding and the LLM: clean text followed by the
/// message's hashtags.
std::string message_prompt_text(const Message& m);

std::string read_file(const std::filesystem::path& p);
/// Writes through a temporary file and renames into place.
void write_file(const std::filesystem::path& p, std::string_view content);
/// Two-space indented dump with a trailing newline; invalid UTF-8 is replaced.
std::string dump_json(const nlohmann::json& j);

}  // namespace convo
