#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace convo {

struct EmbeddingConfig {
  enum class Kind { kLexical, kRemote };
  Kind kind = Kind::kLexical;
  /// Hashed feature count of the lexical provider.
  int dim = 1024;
  /// Full URL of an OpenAI-style embeddings endpoint.
  std::string endpoint;
  std::string model = "text-embedding";
  std::string api_key;
  /// Expected remote vector length; 0 accepts the first length returned.
  int remote_dim = 0;
  int batch_size = 32;
  int in_flight = 2;
  /// Fall back to the lexical provider when the remote provider fails.
  bool fallback = true;
  std::chrono::milliseconds timeout{60000};

  void validate() const;
  static EmbeddingConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// TF-IDF over unigrams and bigrams of word_tokens(), hashed into `dim`
/// buckets and L2-normalized. IDF is fitted on the texts being embedded, so
/// results depend on the whole batch but never on call order.
class LexicalEmbedder {
 public:
  explicit LexicalEmbedder(int dim = 1024);
  Eigen::MatrixXd embed(const std::vector<std::string>& texts) const;
  int dim() const noexcept { return dim_; }

  /// Unigram and bigram features of one text.
  static std::vector<std::string> features(const std::string& text);

 private:
  int dim_;
};

/// Client for POST {endpoint} with {"model", "input": [...]}; batches run
/// concurrently up to in_flight and are reassembled in input order.
class RemoteEmbedder {
 public:
  explicit RemoteEmbedder(EmbeddingConfig cfg);
  /// Throws convo::Error on transport, status or shape failures.
  Eigen::MatrixXd embed(const std::vector<std::string>& texts) const;

 private:
  EmbeddingConfig cfg_;
};

struct EmbedResult {
  Eigen::MatrixXd vectors;  ///< one row per text
  std::string provider;     ///< "lexical" or "remote"
  bool fell_back = false;
};

EmbedResult embed_messages(const std::vector<std::string>& texts, const EmbeddingConfig& cfg);

/// 1 - cosine between rows; zero rows sit at distance 1 from everything.
Eigen::MatrixXd cosine_distances(const Eigen::MatrixXd& vectors);

struct ClusterParams {
  int min_cluster_size = 10;
  int min_samples = 0;
  int target_dim = 5;
  int n_neighbors = 15;
  /// Level-1 clusters with more members than this are clustered again.
  int level2_threshold = 100;
  int top_terms = 10;
  std::uint64_t seed = 42;

  void validate() const;
  static ClusterParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct MessageCluster {
  int cluster_id = 0;
  int level = 1;
  int parent_id = -1;  ///< level-1 parent of a level-2 cluster
  std::vector<std::string> member_ids;
  std::vector<std::string> top_terms;

  std::size_t size() const noexcept { return member_ids.size(); }
};

struct ClusterHierarchy {
  std::vector<MessageCluster> level1;
  std::vector<MessageCluster> level2;
  /// Final partition: each level-1 cluster, or its level-2 children when it was split.
  std::vector<MessageCluster> leaves;
  /// Messages labelled noise by density clustering before centroid attachment.
  std::int64_t attached_noise = 0;
};

/// Labels for one clustering level: reduce, density-cluster, then attach noise
/// rows to the nearest centroid by cosine. Returns all zeros when the input is
/// too small or nothing clusters.
std::vector<int> cluster_level(const Eigen::MatrixXd& vectors, const ClusterParams& params,
                               std::int64_t* attached_noise = nullptr);

/// `texts[i]` is the message behind `vectors.row(i)`, used for top terms.
ClusterHierarchy cluster_two_level(const Eigen::MatrixXd& vectors, const std::vector<std::string>& ids,
                                   const std::vector<std::string>& texts, const ClusterParams& params);

/// Class-based TF-IDF over clusters: each cluster's texts form one document.
/// Returns up to `k` terms per cluster ordered by (score desc, term asc).
std::vector<std::vector<std::string>> class_tfidf_terms(const std::vector<std::vector<std::string>>& cluster_texts,
                                                        int k);

bool is_stopword(const std::string& token);

/// cluster_id <TAB> level <TAB> parent_id <TAB> size <TAB> top terms.
std::string clusters_table(const std::vector<MessageCluster>& clusters);

nlohmann::json to_json(const MessageCluster& c);
MessageCluster message_cluster_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClusterHierarchy& h);
ClusterHierarchy hierarchy_from_json(const nlohmann::json& j);

}  // namespace convo
