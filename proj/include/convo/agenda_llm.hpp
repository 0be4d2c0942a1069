#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "convo/llm_client.hpp"

namespace convo {

/// Prompt texts for the characterization chain. Each text is one file in a
/// template directory; `summary` and `messages_slot` carry `{input_text}`.
struct PromptBundle {
  std::string system;
  std::array<std::string, 4> prompts;
  std::string output_template;
  std::string summary;
  std::string messages_slot = "Messages: {input_text}";
  std::string completion_stem;

  /// The texts shipped in data/prompts, compiled in.
  static PromptBundle defaults();
  /// Reads system.txt, prompt1..4.txt, output_template.txt, summary.txt,
  /// completion_stem.txt and (optionally) messages_slot.txt from `dir`.
  static PromptBundle load(const std::filesystem::path& dir);
  void validate() const;

  /// First user turn of the chain: Prompt 1 followed by the filled message slot.
  std::string first_turn(std::string_view chunk) const;
  /// Prompt 4 with the output template appended.
  std::string final_turn() const;
  /// All four prompts, the template and the message slot in one user turn.
  std::string single_turn(std::string_view chunk) const;
  std::string summary_turn(std::string_view chunk) const;
  /// Stable digest of every text, for cache keys.
  std::uint64_t fingerprint() const;
};

struct LlmConfig {
  std::string endpoint = "http://127.0.0.1:8080/v1/chat/completions";
  std::string model = "llama-2-13b-chat";
  std::string api_key;
  int context_budget_tokens = 4096;
  int max_new_tokens = 500;
  double nucleus_p = 0.9;
  std::chrono::milliseconds timeout{120000};
  int retry = 2;
  std::chrono::milliseconds backoff{500};
  int in_flight = 2;
  /// Prompts 1-4 as successive turns of one conversation; false sends one combined turn.
  bool multi_turn = true;
  /// Send the completion stem as a trailing assistant turn on summary requests.
  bool summary_prefill = false;
  /// Fraction of the context budget left unused by chunk packing.
  double headroom = 0.2;

  void validate() const;
  SamplingParams sampling() const;
  RetryPolicy retry_policy() const;
  static LlmConfig from_json(const nlohmann::json& j);
  /// Omits api_key.
  nlohmann::json to_json() const;
};

/// ceil(bytes / 4). UTF-8 byte length bounds the character count from above.
int estimate_tokens(std::string_view text);

/// Estimated prompt size of a request (sum over message contents).
int request_tokens(const std::vector<ChatMessage>& messages);

/// Largest chunk size, in estimated tokens, for which every request of the
/// chain and the summary stays within the budget minus headroom, counting
/// max_new_tokens for the reply and for each prior reply kept in the conversation.
int chunk_budget(const PromptBundle& bundle, const LlmConfig& cfg);

struct PackItem {
  std::string id;
  std::string text;
  std::int64_t retweet_count = 0;
};

struct Chunk {
  int index = 0;
  std::string text;
  std::vector<std::string> message_ids;
  /// Messages that were cut at a word boundary to fit alone.
  std::vector<std::string> truncated_ids;
};

/// Greedy packing in (retweet_count desc, id asc) order, one message per line.
/// Every estimate_tokens(chunk.text) <= budget.
std::vector<Chunk> pack_messages(std::vector<PackItem> items, int budget);

/// Cuts `text` at a word boundary so that it plus the ellipsis fits in `budget` tokens.
std::string truncate_to_budget(std::string_view text, int budget);

struct ChainResult {
  bool ok = false;
  std::string reply;
  std::string error;
  int attempts = 0;
};

/// Issues Prompts 1-4 over `chunk` and returns the final assistant reply.
ChainResult run_prompt_chain(std::string_view chunk, const PromptBundle& bundle, const LlmConfig& cfg,
                             const LlmClient& client);

struct SnapshotEntry {
  std::string entity;
  std::string promoted_actions;
  std::vector<std::string> emotions;

  bool operator==(const SnapshotEntry& o) const {
    return entity == o.entity && promoted_actions == o.promoted_actions && emotions == o.emotions;
  }
};

/// 1 <= entries <= 5; entities non-empty and distinct under casefold; every
/// entry has >= 1 emotion and no repeated emotion strings.
struct ConvoSnapshot {
  std::vector<SnapshotEntry> entries;
  int cluster_id = -1;
  std::string raw_reply;

  bool same_entries(const ConvoSnapshot& o) const { return entries == o.entries; }
};

inline constexpr std::size_t kMaxSnapshotEntries = 5;

/// Throws convo::Error ("unparseable snapshot") carrying the raw reply when no
/// list of objects can be recovered or no entry survives.
ConvoSnapshot parse_snapshot(std::string_view reply);

/// Renders a snapshot in the output-template layout.
std::string render_snapshot(const ConvoSnapshot& snapshot);

void check_snapshot(const ConvoSnapshot& snapshot);

/// Identical parts count once. Entities merge by casefolded name; actions join
/// with "; "; emotions union in first-seen order; ranking is (contributing parts
/// desc, first seen asc), clamped to five.
ConvoSnapshot merge_snapshots(const std::vector<ConvoSnapshot>& parts);

struct AgendaSummary {
  std::string text;
  bool no_agenda = false;
};

/// Stem-prefixes a model reply; flags replies starting with "no agenda".
AgendaSummary parse_summary(std::string_view reply, const PromptBundle& bundle);

struct SummaryResult {
  bool ok = false;
  AgendaSummary summary;
  std::string raw_reply;
  std::string error;
};

SummaryResult summarize_agenda(std::string_view chunk, const PromptBundle& bundle, const LlmConfig& cfg,
                               const LlmClient& client);

struct ChunkOutcome {
  int chunk_index = 0;
  bool ok = false;
  std::string raw_reply;
  std::string error;
};

struct ClusterCharacterization {
  int cluster_id = -1;
  std::optional<ConvoSnapshot> snapshot;
  std::optional<AgendaSummary> summary;
  std::string summary_raw;
  std::vector<ChunkOutcome> chunks;
  std::vector<std::string> failures;
};

/// Runs the chain on every chunk with at most cfg.in_flight concurrent chunks,
/// merges parsed snapshots in chunk order, and summarizes the first chunk.
ClusterCharacterization characterize_cluster(int cluster_id, const std::vector<Chunk>& chunks,
                                             const PromptBundle& bundle, const LlmConfig& cfg,
                                             const LlmClient& client);

nlohmann::json to_json(const ConvoSnapshot& s);
ConvoSnapshot snapshot_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AgendaSummary& s);
nlohmann::json to_json(const ClusterCharacterization& c);
ClusterCharacterization characterization_from_json(const nlohmann::json& j);

}  // namespace convo
