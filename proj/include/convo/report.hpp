#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "convo/agenda_llm.hpp"
#include "convo/influencers.hpp"

namespace convo {

inline constexpr const char* kReportSchemaVersion = "1.0";

enum class Polarity { kNegative, kPositive, kNeutral };

const char* polarity_name(Polarity p);

/// Emotion word -> polarity. Lookup trims and casefolds; unknown words are neutral.
class PolarityLexicon {
 public:
  /// The lexicon shipped in data/polarity_lexicon.tsv, compiled in.
  static PolarityLexicon builtin();
  /// Lines of `word<TAB>negative|positive|neutral`; '#' starts a comment.
  static PolarityLexicon load(const std::filesystem::path& path);
  static PolarityLexicon parse(std::string_view tsv, std::string_view source = "<lexicon>");

  Polarity lookup(std::string_view emotion) const;
  void set(std::string_view word, Polarity p);
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::unordered_map<std::string, Polarity> words_;
};

/// Quoted DOT string with '"', '\\' and newlines escaped.
std::string dot_quote(std::string_view s);

/// Directed influencer graph: nodes I1..Ik in rank order, `selfrt="true"` on
/// self-retweeting nodes, edges `Ia -> Ib [label="w"]` in (src, dst) rank order.
std::string export_network(const InfluencerNetwork& net, std::string_view graph_name = "influencers");

/// Cluster node -> entity nodes labelled with promoted actions; entity ->
/// emotion edges classed and coloured by polarity (negative red, positive
/// blue, neutral grey).
std::string export_snapshot(const ConvoSnapshot& snapshot, const PolarityLexicon& lexicon,
                            std::string_view center_label = {});

}  // namespace convo
