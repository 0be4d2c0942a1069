#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convo/corpus.hpp"

namespace convo {

/// A planted retweet clique plus an independent retweeting audience.
struct OperationSpec {
  int clique_size = 0;
  /// Probability that a clique member retweets a given message of another member.
  double mutual_rate = 0.8;
  /// Probability that a clique member retweets their own message.
  double self_rate = 0.3;
  int clique_messages = 5;  ///< originals per clique member
  int clique_community = 0;
  /// Retweet-only accounts; each retweets each community original independently.
  int organic_authors = 0;
  double organic_rate = 0.05;
};

struct PlantSpec {
  int communities = 3;
  int hashtags_per_community = 5;
  int messages_per_community = 200;
  int posters_per_community = 20;
  int noise_messages = 100;
  /// Noise messages carry exactly one hashtag from this pool, never co-occurring.
  int noise_hashtags = 40;
  OperationSpec operation;
  std::uint64_t seed = 42;
  std::int64_t start_time = 1640995200;  ///< 2022-01-01T00:00:00Z

  void validate() const;
  static PlantSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SynthTruth {
  std::map<std::string, int> hashtag_community;  ///< noise hashtags map to -1
  std::map<std::string, int> message_community;  ///< originals only; noise messages -1
  std::vector<std::string> clique_authors;
  std::vector<std::string> organic_authors;

  nlohmann::json to_json() const;
  static SynthTruth from_json(const nlohmann::json& j);
};

struct SynthCorpus {
  /// Ingestion-format JSONL, byte-identical for a fixed spec.
  std::string jsonl;
  /// `jsonl` after ingestion, retweet resolution and filtering; invariants checked.
  Corpus corpus;
  SynthTruth truth;
};

SynthCorpus synth_corpus(const PlantSpec& spec);

/// Writes `<stem>.jsonl` and `<stem>.truth.json`.
void write_synth(const SynthCorpus& synth, const std::filesystem::path& jsonl_path);

/// Deterministic draws on the raw engine output so streams match across standard libraries.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }
  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace convo
