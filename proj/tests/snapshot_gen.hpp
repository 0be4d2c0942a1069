#pragma once

#include <random>
#include <set>
#include <string>

#include "convo/agenda_llm.hpp"
#include "convo/text.hpp"

namespace convo::testing {

/// Random text built from fragments that stress the lenient parser: quotes,
/// apostrophes, brackets, commas, colons, backslashes, ellipses and
/// multi-byte letters. Never empty and never padded with spaces.
inline std::string random_phrase(std::mt19937_64& rng) {
  static const char* kParts[] = {"EU", "Macron", "l'Europe", "\"quoted\"", "a, b", "x: y", "[bracket]", "{brace}",
                                 "back\\slash", "caf\xC3\xA9", "\xC3\x89lys\xC3\xA9" "e", "...", "\xE2\x80\xA6", "vote",
                                 "pass sanitaire", "na\xC3\xAFve", "50%", "#frexit", "@user", "tab\there", "new\nline"};
  const int words = 1 + static_cast<int>(rng() % 4);
  std::string out;
  for (int w = 0; w < words; ++w) out += (w ? " " : "") + std::string(kParts[rng() % std::size(kParts)]);
  return out;
}

inline ConvoSnapshot random_snapshot(std::mt19937_64& rng) {
  ConvoSnapshot s;
  const std::size_t n = 1 + rng() % kMaxSnapshotEntries;
  std::set<std::string> seen;
  while (s.entries.size() < n) {
    SnapshotEntry e;
    e.entity = random_phrase(rng) + " " + std::to_string(rng() % 1000);
    if (!seen.insert(casefold(e.entity)).second) continue;
    e.promoted_actions = rng() % 5 == 0 ? std::string{} : random_phrase(rng);
    const std::size_t emotions = 1 + rng() % 3;
    std::set<std::string> distinct;
    while (e.emotions.size() < emotions) {
      std::string emo = random_phrase(rng);
      if (distinct.insert(emo).second) e.emotions.push_back(emo);
    }
    s.entries.push_back(std::move(e));
  }
  return s;
}

}  // namespace convo::testing
