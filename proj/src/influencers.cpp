#include "convo/influencers.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "convo/error.hpp"

namespace convo {

using nlohmann::json;

double InfluencerStats::tweet_share() const noexcept {
  return convo_tweets > 0 ? static_cast<double>(influencer_tweets) / static_cast<double>(convo_tweets) : 0.0;
}

double InfluencerStats::retweet_share() const noexcept {
  return convo_retweets > 0 ? static_cast<double>(influencer_retweets) / static_cast<double>(convo_retweets) : 0.0;
}

void InfluencerNetwork::add_retweet(int src, int dst, std::int64_t count) {
  if (src == dst) {
    self_loops[static_cast<std::size_t>(src)] += count;
  } else {
    edges[{src, dst}] += count;
  }
}

std::vector<InfluencerProfile> top_influencers(const Convo& convo, const Selection& selection) {
  if (convo.authors.empty()) throw Error("convo has no authors", "influencers");
  if (selection.mode == Selection::Mode::kFixedK && selection.k < 1) throw Error("k must be >= 1", "influencers");
  if (selection.mode == Selection::Mode::kProportional && (selection.threshold <= 0.0 || selection.threshold > 1.0)) {
    throw Error("proportional threshold must lie in (0, 1]", "influencers");
  }
  std::vector<InfluencerProfile> ranked;
  ranked.reserve(convo.authors.size());
  for (const auto& [id, s] : convo.authors) ranked.push_back({id, 0, s.tweets, s.received_retweets});
  std::sort(ranked.begin(), ranked.end(), [](const InfluencerProfile& a, const InfluencerProfile& b) {
    if (a.received_retweets_in_convo != b.received_retweets_in_convo) {
      return a.received_retweets_in_convo > b.received_retweets_in_convo;
    }
    return a.author_id < b.author_id;
  });
  std::vector<InfluencerProfile> out;
  if (selection.mode == Selection::Mode::kFixedK) {
    ranked.resize(std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(selection.k)));
    out = std::move(ranked);
  } else {
    const auto total = static_cast<double>(std::max<std::int64_t>(convo.total_tweets, 1));
    for (auto& p : ranked) {
      if (static_cast<double>(p.tweets_in_convo) / total >= selection.threshold) out.push_back(std::move(p));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
  return out;
}

InfluencerStats influencer_stats(const Convo& convo, const std::vector<InfluencerProfile>& profiles) {
  InfluencerStats s;
  s.convo_tweets = convo.total_tweets;
  s.convo_retweets = convo.total_retweets;
  s.convo_authors = convo.total_authors();
  for (const auto& p : profiles) {
    const auto it = convo.authors.find(p.author_id);
    if (it == convo.authors.end()) throw Error("influencer " + p.author_id + " is not a convo author", "influencers");
    s.influencer_tweets += it->second.tweets;
    s.influencer_retweets += it->second.received_retweets;
    ++s.influencer_count;
  }
  return s;
}

InfluencerNetwork build_network(const Corpus& corpus, const std::vector<InfluencerProfile>& profiles) {
  InfluencerNetwork net;
  net.nodes = profiles;
  net.self_loops.assign(profiles.size(), 0);
  std::unordered_map<std::string, int> node_of;
  for (std::size_t i = 0; i < profiles.size(); ++i) node_of.emplace(profiles[i].author_id, static_cast<int>(i));
  for (const auto& rt : corpus.retweets) {
    const auto src = node_of.find(rt.retweeter_id);
    if (src == node_of.end()) continue;
    const auto dst = node_of.find(rt.root_author_id);
    if (dst == node_of.end()) continue;
    net.add_retweet(src->second, dst->second);
  }
  return net;
}

CoordinationMetrics coordination_metrics(const InfluencerNetwork& net, const InfluencerStats& stats,
                                         const CoordinationWeights& weights) {
  const double wsum = weights.density + weights.reciprocity + weights.tweet_share;
  if (weights.density < 0 || weights.reciprocity < 0 || weights.tweet_share < 0 || std::abs(wsum - 1.0) > 1e-9) {
    throw Error("coordination weights must be non-negative and sum to 1", "network");
  }
  CoordinationMetrics m;
  const auto n = static_cast<std::int64_t>(net.size());
  m.edge_count = static_cast<std::int64_t>(net.edges.size());
  std::unordered_set<int> touched;
  for (const auto& [e, w] : net.edges) {
    touched.insert(e.first);
    touched.insert(e.second);
    const auto rev = net.edges.find({e.second, e.first});
    if (rev == net.edges.end()) {
      ++m.connected_pairs;
    } else if (e.first < e.second) {
      ++m.connected_pairs;
      ++m.bidirectional_pairs;
    }
  }
  for (std::size_t i = 0; i < net.self_loops.size(); ++i) {
    if (net.self_loops[i] > 0) {
      ++m.self_loop_nodes;
      m.self_retweets += net.self_loops[i];
      touched.insert(static_cast<int>(i));
    }
  }
  m.connected_nodes = static_cast<std::int64_t>(touched.size());
  m.degenerate = n < 2;
  m.edge_density = m.degenerate ? 0.0 : static_cast<double>(m.edge_count) / static_cast<double>(n * (n - 1));
  m.reciprocity = m.connected_pairs > 0
                      ? static_cast<double>(m.bidirectional_pairs) / static_cast<double>(m.connected_pairs)
                      : 0.0;
  m.influencer_tweet_share = stats.tweet_share();
  m.operation_score = weights.density * m.edge_density + weights.reciprocity * m.reciprocity +
                      weights.tweet_share * m.influencer_tweet_share;
  return m;
}

std::vector<std::string> shared_influencers(const std::vector<InfluencerProfile>& a,
                                            const std::vector<InfluencerProfile>& b) {
  std::unordered_set<std::string> in_b;
  for (const auto& p : b) in_b.insert(p.author_id);
  std::vector<std::string> out;
  for (const auto& p : a) {
    if (in_b.count(p.author_id)) out.push_back(p.author_id);
  }
  return out;
}

json to_json(const InfluencerProfile& p) {
  return {{"author_id", p.author_id},
          {"rank", p.rank},
          {"label", InfluencerNetwork::label(p.rank - 1)},
          {"tweets_in_convo", p.tweets_in_convo},
          {"received_retweets_in_convo", p.received_retweets_in_convo}};
}

json to_json(const InfluencerStats& s) {
  return {{"influencers", s.influencer_count},
          {"convo_authors", s.convo_authors},
          {"influencer_tweets", s.influencer_tweets},
          {"convo_tweets", s.convo_tweets},
          {"influencer_retweets", s.influencer_retweets},
          {"convo_retweets", s.convo_retweets},
          {"tweet_share", s.tweet_share()},
          {"retweet_share", s.retweet_share()}};
}

json to_json(const CoordinationMetrics& m) {
  return {{"edge_density", m.edge_density},
          {"edge_count", m.edge_count},
          {"connected_pairs", m.connected_pairs},
          {"bidirectional_pairs", m.bidirectional_pairs},
          {"reciprocity", m.reciprocity},
          {"self_loop_nodes", m.self_loop_nodes},
          {"self_retweets", m.self_retweets},
          {"connected_nodes", m.connected_nodes},
          {"influencer_tweet_share", m.influencer_tweet_share},
          {"operation_score", m.operation_score},
          {"degenerate", m.degenerate}};
}

json to_json(const InfluencerNetwork& n) {
  json nodes = json::array();
  for (const auto& p : n.nodes) nodes.push_back(to_json(p));
  json edges = json::array();
  for (const auto& [e, w] : n.edges) edges.push_back({e.first, e.second, w});
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"self_loops", n.self_loops}};
}

InfluencerNetwork network_from_json(const json& j) {
  InfluencerNetwork n;
  for (const auto& p : j.at("nodes")) {
    n.nodes.push_back({p.at("author_id"), p.at("rank"), p.at("tweets_in_convo"), p.at("received_retweets_in_convo")});
  }
  for (const auto& e : j.at("edges")) n.edges[{e.at(0).get<int>(), e.at(1).get<int>()}] = e.at(2).get<std::int64_t>();
  n.self_loops = j.at("self_loops").get<std::vector<std::int64_t>>();
  return n;
}

}  // namespace convo
