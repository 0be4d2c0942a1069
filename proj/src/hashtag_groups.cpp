#include "convo/hashtag_groups.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "convo/error.hpp"
#include "convo/text.hpp"

namespace convo {

using nlohmann::json;

std::optional<std::size_t> HashtagVocab::index_of(std::string_view hashtag) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].hashtag == hashtag) return i;
  }
  return std::nullopt;
}

bool HashtagGroup::contains(std::string_view tag) const {
  return std::find(members.begin(), members.end(), tag) != members.end();
}

void Convo::recount() {
  total_tweets = 0;
  total_retweets = 0;
  for (const auto& [_, s] : authors) {
    total_tweets += s.tweets;
    total_retweets += s.received_retweets;
  }
}

HashtagVocab build_vocab(const Corpus& corpus, std::size_t top_n) {
  if (top_n < 1) throw Error("top_n must be >= 1", "hashtag-groups");
  std::unordered_map<std::string, std::int64_t> freq;
  for (const Message* m : corpus.originals()) {
    for (const auto& h : m->hashtags) ++freq[h];
  }
  if (freq.empty()) throw Error("no hashtag vocabulary", "hashtag-groups");
  HashtagVocab vocab;
  vocab.entries.reserve(freq.size());
  for (auto& [tag, f] : freq) vocab.entries.push_back({tag, f});
  std::sort(vocab.entries.begin(), vocab.entries.end(), [](const VocabEntry& a, const VocabEntry& b) {
    return a.frequency != b.frequency ? a.frequency > b.frequency : a.hashtag < b.hashtag;
  });
  if (vocab.entries.size() > top_n) vocab.entries.resize(top_n);
  return vocab;
}

CooccurrenceMatrix cooccurrence(const Corpus& corpus, const HashtagVocab& vocab) {
  if (vocab.size() == 0) throw Error("empty hashtag vocabulary", "hashtag-groups");
  std::unordered_map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab.entries[i].hashtag, static_cast<Eigen::Index>(i));
  std::vector<Eigen::Triplet<std::int64_t>> trips;
  std::vector<Eigen::Index> present;
  for (const Message* m : corpus.originals()) {
    present.clear();
    for (const auto& h : m->hashtags) {
      if (auto it = index.find(h); it != index.end()) present.push_back(it->second);
    }
    for (Eigen::Index a : present) {
      for (Eigen::Index b : present) trips.emplace_back(a, b, 1);
    }
  }
  CooccurrenceMatrix cooc;
  const auto n = static_cast<Eigen::Index>(vocab.size());
  cooc.counts.resize(n, n);
  cooc.counts.setFromTriplets(trips.begin(), trips.end());
  cooc.hashtags.reserve(vocab.size());
  for (const auto& e : vocab.entries) cooc.hashtags.push_back(e.hashtag);
  return cooc;
}

Eigen::MatrixXd distance_matrix(const CooccurrenceMatrix& cooc) {
  const Eigen::Index n = cooc.dim();
  Eigen::SparseMatrix<double> rows = cooc.counts.cast<double>();
  for (Eigen::Index k = 0; k < rows.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(rows, k); it; ++it) {
      if (it.row() == it.col()) it.valueRef() = 0.0;
    }
  }
  rows.prune(0.0);
  const Eigen::SparseMatrix<double> gram = rows * Eigen::SparseMatrix<double>(rows.transpose());
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) norm(i) = std::sqrt(gram.coeff(i, i));
  Eigen::MatrixXd d = Eigen::MatrixXd::Ones(n, n);
  for (Eigen::Index k = 0; k < gram.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(gram, k); it; ++it) {
      const double denom = norm(it.row()) * norm(it.col());
      if (denom > 0.0) d(it.row(), it.col()) = std::clamp(1.0 - it.value() / denom, 0.0, 1.0);
    }
  }
  // Enforce exact symmetry against rounding in the sparse product.
  d = (0.5 * (d + d.transpose())).eval();
  d.diagonal().setZero();
  return d;
}

GroupingResult groups_from_labels(const std::vector<int>& labels, const HashtagVocab& vocab) {
  GroupingResult result;
  std::map<int, HashtagGroup> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      result.noise.push_back(vocab.entries[i].hashtag);
      continue;
    }
    auto& g = by_label[labels[i]];
    g.members.push_back(vocab.entries[i].hashtag);
    g.scores.push_back(vocab.entries[i].frequency);
  }
  // Vocabulary order is (frequency desc, hashtag asc), so members are already
  // ranked. Groups are numbered by the rank of their exemplar.
  std::vector<HashtagGroup> groups;
  for (auto& [_, g] : by_label) groups.push_back(std::move(g));
  std::sort(groups.begin(), groups.end(), [&](const HashtagGroup& a, const HashtagGroup& b) {
    return *vocab.index_of(a.exemplar()) < *vocab.index_of(b.exemplar());
  });
  for (std::size_t i = 0; i < groups.size(); ++i) groups[i].group_id = static_cast<int>(i);
  result.groups = std::move(groups);
  return result;
}

GroupingResult cluster_density(const Eigen::MatrixXd& points, const HashtagVocab& vocab, int min_cluster_size,
                               int min_samples) {
  if (min_cluster_size < 2) throw Error("min_cluster_size must be >= 2", "hashtag-groups");
  const auto res = density::hdbscan(points, {min_cluster_size, min_samples, false});
  auto out = groups_from_labels(res.labels, vocab);
  if (out.groups.empty()) log::warn("density clustering labelled every point as noise");
  return out;
}

GroupingResult build_hashtag_groups(const Corpus& corpus, const GroupingParams& params) {
  const auto vocab = build_vocab(corpus, params.top_n);
  const auto cooc = cooccurrence(corpus, vocab);
  const Eigen::MatrixXd dist = distance_matrix(cooc);
  if (params.min_cluster_size < 2) throw Error("min_cluster_size must be >= 2", "hashtag-groups");
  const bool bypass = params.bypass_small_vocab && cooc.dim() < params.bypass_below;
  if (bypass || cooc.dim() < params.target_dim + 1) {
    const auto res = density::hdbscan_precomputed(dist, {params.min_cluster_size, params.min_samples, false});
    auto out = groups_from_labels(res.labels, vocab);
    if (out.groups.empty()) log::warn("density clustering labelled every hashtag as noise");
    return out;
  }
  embed::UmapParams up;
  up.target_dim = params.target_dim;
  up.n_neighbors = params.n_neighbors;
  up.seed = params.seed;
  const Eigen::MatrixXd points = embed::reduce_dims(dist, up);
  auto out = cluster_density(points, vocab, params.min_cluster_size, params.min_samples);
  out.reduced = true;
  return out;
}

Convo make_convo(const HashtagGroup& group, const std::vector<const Message*>& members,
                 std::vector<std::string> anchor_terms) {
  Convo c;
  c.anchor_terms = std::move(anchor_terms);
  c.source_group = group;
  for (const Message* m : members) {
    c.message_ids.push_back(m->id);
    auto& a = c.authors[m->author_id];
    ++a.tweets;
    a.received_retweets += m->retweet_count;
  }
  c.recount();
  return c;
}

ConvoSearch find_convos(const Corpus& corpus, const std::vector<HashtagGroup>& groups,
                        const std::vector<std::string>& terms) {
  if (terms.empty()) throw Error("at least one term of interest is required", "convo");
  std::vector<std::string> wanted;
  for (const auto& t : terms) {
    auto c = canonical_tag(t);
    if (!c.empty()) wanted.push_back(std::move(c));
  }
  ConvoSearch out;
  const auto originals = corpus.originals();
  for (const auto& g : groups) {
    std::vector<std::string> matched;
    for (const auto& w : wanted) {
      if (g.contains(w)) matched.push_back(w);
    }
    if (matched.empty()) continue;
    const std::unordered_set<std::string> members(g.members.begin(), g.members.end());
    std::vector<const Message*> in_convo;
    for (const Message* m : originals) {
      if (std::any_of(m->hashtags.begin(), m->hashtags.end(), [&](const auto& h) { return members.count(h) > 0; })) {
        in_convo.push_back(m);
      }
    }
    out.convos.push_back(make_convo(g, in_convo, std::move(matched)));
  }
  if (out.convos.empty()) {
    std::vector<std::pair<std::size_t, std::string>> nearest;
    for (const auto& g : groups) {
      for (const auto& h : g.members) {
        std::size_t best = std::string::npos;
        for (const auto& w : wanted) best = std::min(best, edit_distance(w, h));
        nearest.emplace_back(best, h);
      }
    }
    std::sort(nearest.begin(), nearest.end());
    std::ostringstream msg;
    msg << "no hashtag group contains any of the terms";
    if (!nearest.empty()) {
      msg << "; nearest grouped hashtags:";
      for (std::size_t i = 0; i < std::min<std::size_t>(5, nearest.size()); ++i) {
        msg << " #" << nearest[i].second << " (" << nearest[i].first << ")";
      }
    }
    out.diagnostic = msg.str();
  }
  return out;
}

std::string groups_table(const std::vector<HashtagGroup>& groups) {
  std::ostringstream out;
  out << "group_id\thashtag\n";
  for (const auto& g : groups) {
    for (const auto& h : g.members) out << g.group_id << '\t' << h << '\n';
  }
  return out.str();
}

json to_json(const HashtagGroup& g) {
  return {{"group_id", g.group_id}, {"kind", g.kind}, {"exemplar", g.exemplar()}, {"members", g.members},
          {"scores", g.scores}};
}

HashtagGroup group_from_json(const json& j) {
  HashtagGroup g;
  g.group_id = j.at("group_id");
  g.kind = j.at("kind");
  g.members = j.at("members").get<std::vector<std::string>>();
  g.scores = j.at("scores").get<std::vector<std::int64_t>>();
  return g;
}

json to_json(const Convo& c) {
  json authors = json::object();
  for (const auto& [id, s] : c.authors) authors[id] = {{"tweets", s.tweets}, {"received_retweets", s.received_retweets}};
  return {{"anchor_terms", c.anchor_terms},
          {"source_group", to_json(c.source_group)},
          {"message_ids", c.message_ids},
          {"authors", std::move(authors)},
          {"total_authors", c.total_authors()},
          {"total_tweets", c.total_tweets},
          {"total_retweets", c.total_retweets}};
}

Convo convo_from_json(const json& j) {
  Convo c;
  c.anchor_terms = j.at("anchor_terms").get<std::vector<std::string>>();
  c.source_group = group_from_json(j.at("source_group"));
  c.message_ids = j.at("message_ids").get<std::vector<std::string>>();
  for (const auto& [id, s] : j.at("authors").items()) {
    c.authors[id] = {s.at("tweets").get<std::int64_t>(), s.at("received_retweets").get<std::int64_t>()};
  }
  c.recount();
  return c;
}

}  // namespace convo
