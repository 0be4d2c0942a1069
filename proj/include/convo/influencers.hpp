#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "convo/corpus.hpp"
#include "convo/hashtag_groups.hpp"

namespace convo {

struct InfluencerProfile {
  std::string author_id;
  int rank = 0;  ///< 1-based
  std::int64_t tweets_in_convo = 0;
  std::int64_t received_retweets_in_convo = 0;
};

struct InfluencerStats {
  std::int64_t influencer_tweets = 0;
  std::int64_t convo_tweets = 0;
  std::int64_t influencer_retweets = 0;
  std::int64_t convo_retweets = 0;
  std::int64_t influencer_count = 0;
  std::int64_t convo_authors = 0;

  double tweet_share() const noexcept;
  double retweet_share() const noexcept;
};

struct Selection {
  enum class Mode { kFixedK, kProportional };
  Mode mode = Mode::kFixedK;
  int k = 10;
  double threshold = 0.01;

  static Selection fixed(int k) { return {Mode::kFixedK, k, 0.0}; }
  static Selection proportional(double threshold) { return {Mode::kProportional, 0, threshold}; }
};

/// Directed retweet graph among influencers. Edges run from the retweeter to
/// the original author; weights count retweets over the whole corpus.
struct InfluencerNetwork {
  std::vector<InfluencerProfile> nodes;  ///< rank order; display label I<rank>
  std::map<std::pair<int, int>, std::int64_t> edges;  ///< (src node, dst node) -> weight, both 0-based
  std::vector<std::int64_t> self_loops;               ///< per node

  std::size_t size() const noexcept { return nodes.size(); }
  static std::string label(int node) { return "I" + std::to_string(node + 1); }
  void add_retweet(int src, int dst, std::int64_t count = 1);
};

struct CoordinationWeights {
  double density = 0.4;
  double reciprocity = 0.4;
  double tweet_share = 0.2;
};

struct CoordinationMetrics {
  double edge_density = 0.0;
  std::int64_t edge_count = 0;
  std::int64_t connected_pairs = 0;
  std::int64_t bidirectional_pairs = 0;
  double reciprocity = 0.0;
  std::int64_t self_loop_nodes = 0;
  std::int64_t self_retweets = 0;
  std::int64_t connected_nodes = 0;
  double influencer_tweet_share = 0.0;
  double operation_score = 0.0;
  bool degenerate = false;  ///< fewer than two nodes

  bool flags_operation(double threshold = 0.5) const noexcept { return operation_score >= threshold; }
};

std::vector<InfluencerProfile> top_influencers(const Convo& convo, const Selection& selection);

InfluencerStats influencer_stats(const Convo& convo, const std::vector<InfluencerProfile>& profiles);

InfluencerNetwork build_network(const Corpus& corpus, const std::vector<InfluencerProfile>& profiles);

CoordinationMetrics coordination_metrics(const InfluencerNetwork& net, const InfluencerStats& stats,
                                         const CoordinationWeights& weights = {});

/// Authors present in both influencer lists.
std::vector<std::string> shared_influencers(const std::vector<InfluencerProfile>& a,
                                            const std::vector<InfluencerProfile>& b);

nlohmann::json to_json(const InfluencerProfile& p);
nlohmann::json to_json(const InfluencerStats& s);
nlohmann::json to_json(const CoordinationMetrics& m);
nlohmann::json to_json(const InfluencerNetwork& n);
InfluencerNetwork network_from_json(const nlohmann::json& j);

}  // namespace convo
