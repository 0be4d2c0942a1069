#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <nlohmann/json.hpp>

#include "convo/corpus.hpp"
#include "convo/hdbscan.hpp"
#include "convo/umap.hpp"

namespace convo {

struct VocabEntry {
  std::string hashtag;
  std::int64_t frequency = 0;
};

/// Hashtags ordered by (frequency desc, hashtag asc), capped at top_n.
struct HashtagVocab {
  std::vector<VocabEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  std::optional<std::size_t> index_of(std::string_view hashtag) const;
};

/// Symmetric message co-occurrence counts over a vocabulary; the diagonal
/// holds each hashtag's message frequency.
struct CooccurrenceMatrix {
  Eigen::SparseMatrix<std::int64_t> counts;
  std::vector<std::string> hashtags;

  Eigen::Index dim() const noexcept { return counts.rows(); }
  std::int64_t at(Eigen::Index i, Eigen::Index j) const { return counts.coeff(i, j); }
};

struct HashtagGroup {
  int group_id = 0;
  /// Ordered by (frequency desc, hashtag asc); the first member is the exemplar.
  std::vector<std::string> members;
  std::vector<std::int64_t> scores;
  std::string kind = "hashtag";  ///< "hashtag" or "topic"

  const std::string& exemplar() const { return members.front(); }
  bool contains(std::string_view tag) const;
};

struct GroupingParams {
  std::size_t top_n = 6000;
  int target_dim = 5;
  int n_neighbors = 15;
  int min_cluster_size = 10;
  int min_samples = 0;
  /// Cluster the distance matrix directly when the vocabulary is below bypass_below.
  bool bypass_small_vocab = true;
  Eigen::Index bypass_below = 200;
  std::uint64_t seed = 42;
};

struct GroupingResult {
  std::vector<HashtagGroup> groups;
  std::vector<std::string> noise;
  bool reduced = false;
};

/// Per-author totals inside a convo.
struct AuthorStats {
  std::int64_t tweets = 0;
  std::int64_t received_retweets = 0;
};

struct Convo {
  std::vector<std::string> anchor_terms;
  HashtagGroup source_group;
  std::vector<std::string> message_ids;
  std::map<std::string, AuthorStats> authors;
  std::int64_t total_tweets = 0;
  std::int64_t total_retweets = 0;

  std::int64_t total_authors() const noexcept { return static_cast<std::int64_t>(authors.size()); }
  /// Recomputes totals from the per-author table.
  void recount();
};

struct ConvoSearch {
  std::vector<Convo> convos;
  /// Set when no group matched: lists the nearest hashtags by edit distance.
  std::string diagnostic;
};

HashtagVocab build_vocab(const Corpus& corpus, std::size_t top_n);

CooccurrenceMatrix cooccurrence(const Corpus& corpus, const HashtagVocab& vocab);

/// 1 - cosine(x, y); zero vectors are at distance 1 from everything.
template <typename DerivedA, typename DerivedB>
double cosine_distance(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y) {
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return 1.0;
  return std::clamp(1.0 - x.dot(y) / (nx * ny), 0.0, 1.0);
}

/// Pairwise 1 - cosine over co-occurrence rows with the diagonal zeroed.
Eigen::MatrixXd distance_matrix(const CooccurrenceMatrix& cooc);

/// Wraps cluster labels into hashtag groups; label -1 is noise.
GroupingResult groups_from_labels(const std::vector<int>& labels, const HashtagVocab& vocab);

/// HDBSCAN over embedded hashtag points (rows).
GroupingResult cluster_density(const Eigen::MatrixXd& points, const HashtagVocab& vocab, int min_cluster_size,
                               int min_samples = 0);

/// Vocabulary → co-occurrence → distances → (reduction) → density clustering.
GroupingResult build_hashtag_groups(const Corpus& corpus, const GroupingParams& params);

/// One convo per group containing any of `terms` (case-insensitive, '#' optional).
ConvoSearch find_convos(const Corpus& corpus, const std::vector<HashtagGroup>& groups,
                        const std::vector<std::string>& terms);

/// Builds a convo from explicit member messages (used by the topic path).
Convo make_convo(const HashtagGroup& group, const std::vector<const Message*>& members,
                 std::vector<std::string> anchor_terms);

/// Two-column export: group_id <TAB> hashtag.
std::string groups_table(const std::vector<HashtagGroup>& groups);

nlohmann::json to_json(const HashtagGroup& g);
HashtagGroup group_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Convo& c);
Convo convo_from_json(const nlohmann::json& j);

}  // namespace convo
