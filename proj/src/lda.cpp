#include "convo/lda.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "convo/error.hpp"
#include "convo/text.hpp"

namespace convo {

std::vector<std::string> TopicModel::top_words(int topic, std::size_t n) const {
  std::vector<int> idx(vocab.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto row = phi.row(topic);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return row(a) > row(b); });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(n, idx.size()); ++i) out.push_back(vocab[static_cast<std::size_t>(idx[i])]);
  return out;
}

int TopicModel::dominant_topic(std::size_t doc) const {
  Eigen::Index best = 0;
  theta.row(static_cast<Eigen::Index>(doc)).maxCoeff(&best);
  return static_cast<int>(best);
}

LdaSampler::LdaSampler(std::vector<std::vector<int>> docs, int vocab_size, const LdaParams& params)
    : docs_(std::move(docs)), vocab_size_(vocab_size), params_(params), rng_(params.seed) {
  if (params.topics < 2) throw Error("LDA needs at least 2 topics", "lda");
  if (params.alpha <= 0.0 || params.beta <= 0.0) throw Error("LDA hyperparameters must be positive", "lda");
  if (docs_.empty()) throw Error("LDA needs at least one document", "lda");
  const int k = params.topics;
  topic_word_ = CountMatrix::Zero(k, vocab_size_);
  doc_topic_ = CountMatrix::Zero(static_cast<Eigen::Index>(docs_.size()), k);
  topic_totals_ = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(k);
  weights_.resize(static_cast<std::size_t>(k));
  std::uniform_int_distribution<int> pick(0, k - 1);
  assign_.resize(docs_.size());
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    if (docs_[d].empty()) throw Error("LDA document " + std::to_string(d) + " is empty", "lda");
    assign_[d].resize(docs_[d].size());
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      const int z = pick(rng_);
      assign_[d][i] = z;
      ++topic_word_(z, docs_[d][i]);
      ++doc_topic_(static_cast<Eigen::Index>(d), z);
      ++topic_totals_(z);
      ++total_tokens_;
    }
  }
}

void LdaSampler::sweep() {
  const int k = params_.topics;
  const double vbeta = vocab_size_ * params_.beta;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    const auto di = static_cast<Eigen::Index>(d);
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      const int w = docs_[d][i];
      int z = assign_[d][i];
      --topic_word_(z, w);
      --doc_topic_(di, z);
      --topic_totals_(z);
      double total = 0.0;
      for (int t = 0; t < k; ++t) {
        const double p = (static_cast<double>(topic_word_(t, w)) + params_.beta) /
                         (static_cast<double>(topic_totals_(t)) + vbeta) *
                         (static_cast<double>(doc_topic_(di, t)) + params_.alpha);
        total += p;
        weights_[static_cast<std::size_t>(t)] = total;
      }
      const double u = unit(rng_) * total;
      z = static_cast<int>(std::upper_bound(weights_.begin(), weights_.end(), u) - weights_.begin());
      z = std::min(z, k - 1);
      assign_[d][i] = z;
      ++topic_word_(z, w);
      ++doc_topic_(di, z);
      ++topic_totals_(z);
    }
  }
}

Eigen::MatrixXd LdaSampler::phi() const {
  Eigen::MatrixXd p = topic_word_.cast<double>().array() + params_.beta;
  for (Eigen::Index t = 0; t < p.rows(); ++t) p.row(t) /= p.row(t).sum();
  return p;
}

Eigen::MatrixXd LdaSampler::theta() const {
  Eigen::MatrixXd th = doc_topic_.cast<double>().array() + params_.alpha;
  for (Eigen::Index d = 0; d < th.rows(); ++d) th.row(d) /= th.row(d).sum();
  return th;
}

TopicModel fit_lda(const std::vector<std::vector<std::string>>& docs, const std::vector<std::string>& doc_ids,
                   const LdaParams& params, const LdaObserver& observer) {
  if (params.topics < 2) throw Error("LDA needs at least 2 topics", "lda");
  if (params.iterations < 1) throw Error("LDA needs at least 1 iteration", "lda");
  std::map<std::string, int> index;
  for (const auto& d : docs) {
    for (const auto& w : d) index.emplace(w, 0);
  }
  TopicModel model;
  int next = 0;
  for (auto& [w, i] : index) {
    i = next++;
    model.vocab.push_back(w);
  }
  std::vector<std::vector<int>> encoded;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (docs[d].empty()) continue;
    std::vector<int> enc;
    enc.reserve(docs[d].size());
    for (const auto& w : docs[d]) enc.push_back(index.at(w));
    encoded.push_back(std::move(enc));
    model.doc_ids.push_back(d < doc_ids.size() ? doc_ids[d] : std::to_string(d));
  }
  if (encoded.empty()) throw Error("LDA input has no non-empty documents", "lda");
  LdaSampler sampler(std::move(encoded), next, params);
  for (int it = 1; it <= params.iterations; ++it) {
    sampler.sweep();
    if (observer) observer(sampler, it);
  }
  model.topics = params.topics;
  model.params = params;
  model.phi = sampler.phi();
  model.theta = sampler.theta();
  return model;
}

TopicModel fit_lda(const Corpus& corpus, const LdaParams& params, const LdaObserver& observer) {
  std::vector<std::vector<std::string>> docs;
  std::vector<std::string> ids;
  for (const Message* m : corpus.originals()) {
    docs.push_back(word_tokens(m->clean_text));
    ids.push_back(m->id);
  }
  return fit_lda(docs, ids, params, observer);
}

std::vector<HashtagGroup> topic_groups(const TopicModel& model, std::size_t top_words) {
  std::vector<HashtagGroup> out;
  for (int t = 0; t < model.topics; ++t) {
    HashtagGroup g;
    g.group_id = t;
    g.kind = "topic";
    g.members = model.top_words(t, top_words);
    std::vector<int> idx;
    for (const auto& w : g.members) {
      const auto it = std::lower_bound(model.vocab.begin(), model.vocab.end(), w);
      const auto col = static_cast<Eigen::Index>(it - model.vocab.begin());
      // Scores are expected counts per million tokens of the topic.
      g.scores.push_back(static_cast<std::int64_t>(model.phi(t, col) * 1e6));
    }
    out.push_back(std::move(g));
  }
  return out;
}

ConvoSearch find_topic_convos(const Corpus& corpus, const TopicModel& model, const std::vector<std::string>& terms,
                              std::size_t top_words) {
  if (terms.empty()) throw Error("at least one term of interest is required", "convo");
  ConvoSearch out;
  const auto groups = topic_groups(model, top_words);
  for (const auto& g : groups) {
    std::vector<std::string> matched;
    for (const auto& t : terms) {
      const auto c = canonical_tag(t);
      if (g.contains(c)) matched.push_back(c);
    }
    if (matched.empty()) continue;
    std::vector<const Message*> members;
    for (std::size_t d = 0; d < model.doc_ids.size(); ++d) {
      if (model.dominant_topic(d) != g.group_id) continue;
      if (const Message* m = corpus.find(model.doc_ids[d])) members.push_back(m);
    }
    out.convos.push_back(make_convo(g, members, std::move(matched)));
  }
  if (out.convos.empty()) out.diagnostic = "no topic has any of the terms among its top words";
  return out;
}

}  // namespace convo
