#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "convo/corpus.hpp"
#include "convo/hashtag_groups.hpp"

namespace convo {

struct LdaParams {
  int topics = 10;
  int iterations = 500;
  double alpha = 0.1;
  double beta = 0.01;
  std::uint64_t seed = 42;
};

/// Smoothed point estimates from the final Gibbs state. Rows of phi (K x V)
/// and theta (D x K) are probability distributions.
struct TopicModel {
  int topics = 0;
  std::vector<std::string> vocab;
  std::vector<std::string> doc_ids;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd theta;
  LdaParams params;

  std::vector<std::string> top_words(int topic, std::size_t n) const;
  int dominant_topic(std::size_t doc) const;
};

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Collapsed Gibbs sampler over token-topic assignments.
class LdaSampler {
 public:
  /// `docs` holds vocabulary indices; every document must be non-empty.
  LdaSampler(std::vector<std::vector<int>> docs, int vocab_size, const LdaParams& params);

  void sweep();

  const CountMatrix& topic_word() const noexcept { return topic_word_; }
  const CountMatrix& doc_topic() const noexcept { return doc_topic_; }
  const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>& topic_totals() const noexcept { return topic_totals_; }
  std::int64_t total_tokens() const noexcept { return total_tokens_; }

  Eigen::MatrixXd phi() const;
  Eigen::MatrixXd theta() const;

 private:
  std::vector<std::vector<int>> docs_;
  std::vector<std::vector<int>> assign_;
  int vocab_size_;
  LdaParams params_;
  CountMatrix topic_word_;
  CountMatrix doc_topic_;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> topic_totals_;
  std::int64_t total_tokens_ = 0;
  std::mt19937_64 rng_;
  std::vector<double> weights_;
};

/// Observer called after each sweep with the sampler and the 1-based iteration.
using LdaObserver = std::function<void(const LdaSampler&, int)>;

TopicModel fit_lda(const std::vector<std::vector<std::string>>& docs, const std::vector<std::string>& doc_ids,
                   const LdaParams& params, const LdaObserver& observer = {});

/// Documents are word_tokens(clean_text) of the retained originals.
TopicModel fit_lda(const Corpus& corpus, const LdaParams& params, const LdaObserver& observer = {});

/// A topic group is the top `top_words` words of a topic.
std::vector<HashtagGroup> topic_groups(const TopicModel& model, std::size_t top_words = 20);

/// Convos for topics whose top words contain a term; members are the
/// documents whose dominant topic is that topic.
ConvoSearch find_topic_convos(const Corpus& corpus, const TopicModel& model, const std::vector<std::string>& terms,
                              std::size_t top_words = 20);

}  // namespace convo
