#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace convo {

/// One post. Hashtags are lowercase, non-empty and deduplicated.
struct Message {
  std::string id;
  std::string author_id;
  std::optional<std::int64_t> timestamp;
  std::string raw_text;
  std::string clean_text;
  std::vector<std::string> hashtags;
  int token_count = 0;
  std::optional<std::string> retweet_of;
  /// Root original this record resolves to (retweet records only).
  std::optional<std::string> root_id;
  /// Number of corpus records resolving to this message; originals only.
  std::int64_t retweet_count = 0;
  /// Set by filter_messages; retweet records are always filtered out of the original view.
  bool filtered_out = false;

  bool is_retweet() const noexcept { return retweet_of.has_value(); }
};

/// A resolved retweet: who retweeted whose root original.
struct RetweetLink {
  std::string retweet_id;
  std::string retweeter_id;
  std::string root_id;
  std::string root_author_id;
};

/// Accounting over the ingestion pipeline. After filtering,
/// raw == retained + dropped_filter + retweet_records + skipped.
struct CorpusStats {
  std::int64_t raw = 0;
  std::int64_t skipped = 0;
  std::int64_t originals = 0;
  std::int64_t retweet_records = 0;
  std::int64_t resolved_retweets = 0;
  std::int64_t dangling = 0;
  std::int64_t cycles = 0;
  std::int64_t retained = 0;
  std::int64_t dropped_filter = 0;
  std::vector<std::string> skipped_samples;
};

struct Corpus {
  /// Ordered by (timestamp asc, absent last, id asc).
  std::vector<Message> messages;
  std::vector<RetweetLink> retweets;
  CorpusStats stats;

  const Message* find(std::string_view id) const;
  /// Original (non-retweet) messages that survived filtering.
  std::vector<const Message*> originals() const;
  /// Rebuilds the id index after `messages` was modified directly.
  void reindex() const;

 private:
  mutable std::unordered_map<std::string, std::size_t> index_;
};

enum class HashtagSource { kRegex, kField };

/// Maps source record keys onto Message fields. Keys may be dotted paths
/// ("user.id_str") into nested objects; unknown source keys are ignored.
struct SchemaMap {
  std::string id = "id";
  std::string author = "author_id";
  std::string text = "text";
  std::string timestamp = "timestamp";
  std::string retweet_of = "retweet_of";
  HashtagSource hashtag_source = HashtagSource::kRegex;
  std::string hashtag_field = "hashtags";

  /// Layout of the 2022 French presidential election dump (Twitter v1.1 objects).
  static SchemaMap french_election();
  static SchemaMap from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

/// Reads one JSON record per line. Malformed lines are counted and skipped.
Corpus parse_corpus(const std::filesystem::path& path, const SchemaMap& schema);
Corpus parse_corpus(std::istream& in, const SchemaMap& schema, std::string_view source_name = "<stream>");

/// Follows every retweet chain to its root and recounts retweet_count from scratch.
Corpus resolve_retweets(Corpus corpus);

/// Keeps originals with >= 1 hashtag and >= 3 textual tokens.
Corpus filter_messages(Corpus corpus);

/// Throws convo::Error describing the first violated corpus invariant.
void check_corpus_invariants(const Corpus& corpus);

nlohmann::json corpus_to_json(const Corpus& corpus);
Corpus corpus_from_json(const nlohmann::json& j);

/// One ingestion-format line for `m` under the default SchemaMap.
nlohmann::json message_record(const Message& m);

}  // namespace convo
