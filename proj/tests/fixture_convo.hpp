#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "convo/hashtag_groups.hpp"

namespace convo::testing {

/// Builds a convo whose author table sums to the fixture totals: the
/// influencer authors split the influencer tweets and retweets evenly, the
/// remaining authors split the rest, and every influencer out-receives every
/// other author so top-k selection recovers exactly the influencer set.
inline Convo convo_from_counts(const nlohmann::json& fx) {
  const auto& inf = fx.at("influencers");
  const auto& all = fx.at("convo");
  Convo c;
  c.anchor_terms = {fx.at("name").get<std::string>()};
  c.source_group.members = {fx.at("name").get<std::string>()};
  auto spread = [&](const std::string& prefix, std::int64_t authors, std::int64_t tweets, std::int64_t retweets) {
    for (std::int64_t a = 0; a < authors; ++a) {
      AuthorStats s;
      s.tweets = tweets / authors + (a < tweets % authors ? 1 : 0);
      s.received_retweets = retweets / authors + (a < retweets % authors ? 1 : 0);
      c.authors[prefix + std::to_string(100000 + a)] = s;
    }
  };
  const std::int64_t k = inf.at("authors");
  spread("inf", k, inf.at("tweets"), inf.at("retweets"));
  spread("oth", all.at("authors").get<std::int64_t>() - k, all.at("tweets").get<std::int64_t>() - inf.at("tweets").get<std::int64_t>(),
         all.at("retweets").get<std::int64_t>() - inf.at("retweets").get<std::int64_t>());
  c.recount();
  return c;
}

}  // namespace convo::testing
