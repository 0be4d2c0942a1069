#include "convo/msg_cluster.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "convo/error.hpp"
#include "convo/hdbscan.hpp"
#include "convo/llm_client.hpp"
#include "convo/text.hpp"
#include "convo/umap.hpp"

namespace convo {

using nlohmann::json;

void EmbeddingConfig::validate() const {
  if (dim < 1) throw Error("embedding dim must be >= 1", "clusters");
  if (batch_size < 1) throw Error("embedding batch_size must be >= 1", "clusters");
  if (in_flight < 1) throw Error("embedding in_flight must be >= 1", "clusters");
  if (remote_dim < 0) throw Error("remote_dim must be >= 0", "clusters");
  if (kind == Kind::kRemote && endpoint.empty()) throw Error("remote embedding provider needs an endpoint", "clusters");
}

EmbeddingConfig EmbeddingConfig::from_json(const json& j) {
  EmbeddingConfig c;
  const std::string kind = j.value("provider", std::string("lexical"));
  if (kind == "lexical") {
    c.kind = Kind::kLexical;
  } else if (kind == "remote") {
    c.kind = Kind::kRemote;
  } else {
    throw Error("unknown embedding provider '" + kind + "' (expected lexical or remote)", "clusters");
  }
  c.dim = j.value("dim", c.dim);
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model = j.value("model", c.model);
  c.api_key = j.value("api_key", c.api_key);
  c.remote_dim = j.value("remote_dim", c.remote_dim);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.in_flight = j.value("in_flight", c.in_flight);
  c.fallback = j.value("fallback", c.fallback);
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<std::int64_t>(c.timeout.count())));
  c.validate();
  return c;
}

json EmbeddingConfig::to_json() const {
  return {{"provider", kind == Kind::kLexical ? "lexical" : "remote"},
          {"dim", dim},
          {"endpoint", endpoint},
          {"model", model},
          {"remote_dim", remote_dim},
          {"batch_size", batch_size},
          {"in_flight", in_flight},
          {"fallback", fallback},
          {"timeout_ms", timeout.count()}};
}

LexicalEmbedder::LexicalEmbedder(int dim) : dim_(dim) {
  if (dim < 1) throw Error("embedding dim must be >= 1", "clusters");
}

std::vector<std::string> LexicalEmbedder::features(const std::string& text) {
  const auto toks = word_tokens(text);
  std::vector<std::string> out(toks.begin(), toks.end());
  for (std::size_t i = 1; i < toks.size(); ++i) out.push_back(toks[i - 1] + " " + toks[i]);
  return out;
}

Eigen::MatrixXd LexicalEmbedder::embed(const std::vector<std::string>& texts) const {
  const auto n = static_cast<Eigen::Index>(texts.size());
  std::vector<std::map<std::string, int>> tf(texts.size());
  std::unordered_map<std::string, int> df;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (auto& f : features(texts[i])) ++tf[i][std::move(f)];
    for (const auto& [f, _] : tf[i]) ++df[f];
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, dim_);
  const double docs = static_cast<double>(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (const auto& [f, count] : tf[i]) {
      const double idf = std::log((1.0 + docs) / (1.0 + df[f])) + 1.0;
      const auto bucket = static_cast<Eigen::Index>(fnv1a64(f) % static_cast<std::uint64_t>(dim_));
      out(static_cast<Eigen::Index>(i), bucket) += count * idf;
    }
    const double norm = out.row(static_cast<Eigen::Index>(i)).norm();
    if (norm > 0.0) out.row(static_cast<Eigen::Index>(i)) /= norm;
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(EmbeddingConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Eigen::MatrixXd RemoteEmbedder::embed(const std::vector<std::string>& texts) const {
  const HttpUrl url = HttpUrl::parse(cfg_.endpoint);
  const std::size_t bs = static_cast<std::size_t>(cfg_.batch_size);
  const std::size_t n_batches = (texts.size() + bs - 1) / bs;
  std::vector<std::vector<std::vector<double>>> batches(n_batches);
  std::vector<std::string> errors(n_batches);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t b = next.fetch_add(1); b < n_batches; b = next.fetch_add(1)) {
      const std::size_t lo = b * bs;
      const std::size_t hi = std::min(texts.size(), lo + bs);
      const json payload{{"model", cfg_.model},
                         {"input", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(lo),
                                                            texts.begin() + static_cast<std::ptrdiff_t>(hi))}};
      const HttpReply reply = http_post_json(url, payload.dump(), cfg_.api_key, cfg_.timeout);
      if (reply.status != 200) {
        errors[b] = reply.status == 0 ? reply.error : "HTTP " + std::to_string(reply.status);
        continue;
      }
      const json body = json::parse(reply.body, nullptr, false);
      if (body.is_discarded() || !body.contains("data") || !body["data"].is_array() || body["data"].size() != hi - lo) {
        errors[b] = "malformed embeddings response";
        continue;
      }
      std::vector<std::vector<double>> rows(hi - lo);
      for (const auto& item : body["data"]) {
        const auto idx = item.value("index", static_cast<std::size_t>(0));
        if (idx >= rows.size() || !item.contains("embedding")) {
          errors[b] = "malformed embeddings response";
          break;
        }
        rows[idx] = item["embedding"].get<std::vector<double>>();
      }
      batches[b] = std::move(rows);
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg_.in_flight), n_batches);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (!e.empty()) throw Error("embedding request failed: " + e, "clusters");
  }
  std::size_t dim = static_cast<std::size_t>(cfg_.remote_dim);
  if (dim == 0 && !batches.empty() && !batches[0].empty()) dim = batches[0][0].size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(texts.size()), static_cast<Eigen::Index>(dim));
  Eigen::Index r = 0;
  for (const auto& batch : batches) {
    for (const auto& row : batch) {
      if (row.size() != dim || dim == 0) {
        throw Error("embedding has " + std::to_string(row.size()) + " dimensions, expected " + std::to_string(dim),
                    "clusters");
      }
      out.row(r++) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(dim));
    }
  }
  return out;
}

EmbedResult embed_messages(const std::vector<std::string>& texts, const EmbeddingConfig& cfg) {
  if (texts.empty()) throw Error("no messages to embed", "clusters");
  cfg.validate();
  EmbedResult out;
  if (cfg.kind == EmbeddingConfig::Kind::kRemote) {
    try {
      out.vectors = RemoteEmbedder(cfg).embed(texts);
      out.provider = "remote";
      return out;
    } catch (const Error& e) {
      if (!cfg.fallback) throw;
      log::warn(std::string(e.what()) + "; falling back to lexical embeddings");
      out.fell_back = true;
    }
  }
  out.vectors = LexicalEmbedder(cfg.dim).embed(texts);
  out.provider = "lexical";
  return out;
}

Eigen::MatrixXd cosine_distances(const Eigen::MatrixXd& vectors) {
  Eigen::MatrixXd unit = vectors;
  std::vector<bool> zero(static_cast<std::size_t>(vectors.rows()), false);
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    const double norm = unit.row(i).norm();
    if (norm > 0.0) {
      unit.row(i) /= norm;
    } else {
      zero[static_cast<std::size_t>(i)] = true;
    }
  }
  Eigen::MatrixXd d = (Eigen::MatrixXd::Ones(unit.rows(), unit.rows()) - unit * unit.transpose()).cwiseMax(0.0).cwiseMin(2.0);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (zero[static_cast<std::size_t>(i)]) {
      d.row(i).setOnes();
      d.col(i).setOnes();
    }
  }
  d = (0.5 * (d + d.transpose())).eval();
  d.diagonal().setZero();
  return d;
}

void ClusterParams::validate() const {
  if (min_cluster_size < 2) throw Error("min_cluster_size must be >= 2", "clusters");
  if (min_samples < 0) throw Error("min_samples must be >= 0", "clusters");
  if (target_dim < 1) throw Error("target_dim must be >= 1", "clusters");
  if (n_neighbors < 2) throw Error("n_neighbors must be >= 2", "clusters");
  if (level2_threshold < 1) throw Error("level2_threshold must be >= 1", "clusters");
  if (top_terms < 0) throw Error("top_terms must be >= 0", "clusters");
}

ClusterParams ClusterParams::from_json(const json& j) {
  ClusterParams p;
  p.min_cluster_size = j.value("min_cluster_size", p.min_cluster_size);
  p.min_samples = j.value("min_samples", p.min_samples);
  p.target_dim = j.value("target_dim", p.target_dim);
  p.n_neighbors = j.value("n_neighbors", p.n_neighbors);
  p.level2_threshold = j.value("level2_threshold", p.level2_threshold);
  p.top_terms = j.value("top_terms", p.top_terms);
  p.seed = j.value("seed", p.seed);
  p.validate();
  return p;
}

json ClusterParams::to_json() const {
  return {{"min_cluster_size", min_cluster_size}, {"min_samples", min_samples}, {"target_dim", target_dim},
          {"n_neighbors", n_neighbors},           {"level2_threshold", level2_threshold}, {"top_terms", top_terms},
          {"seed", seed}};
}

std::vector<int> cluster_level(const Eigen::MatrixXd& vectors, const ClusterParams& params,
                               std::int64_t* attached_noise) {
  params.validate();
  const Eigen::Index n = vectors.rows();
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  if (attached_noise) *attached_noise = 0;
  if (n < 2 * static_cast<Eigen::Index>(params.min_cluster_size)) return labels;

  const Eigen::MatrixXd dist = cosine_distances(vectors);
  embed::UmapParams up;
  up.target_dim = params.target_dim;
  up.n_neighbors = params.n_neighbors;
  up.seed = params.seed;
  const Eigen::MatrixXd points = embed::reduce_dims(dist, up);
  const auto res = density::hdbscan(points, {params.min_cluster_size, params.min_samples, false});
  if (res.num_clusters == 0) return labels;

  // Renumber by (size desc, first member asc).
  std::vector<std::int64_t> size(static_cast<std::size_t>(res.num_clusters), 0);
  std::vector<Eigen::Index> first(static_cast<std::size_t>(res.num_clusters), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int l = res.labels[static_cast<std::size_t>(i)];
    if (l < 0) continue;
    ++size[static_cast<std::size_t>(l)];
    first[static_cast<std::size_t>(l)] = std::min(first[static_cast<std::size_t>(l)], i);
  }
  std::vector<int> order(static_cast<std::size_t>(res.num_clusters));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    return size[ua] != size[ub] ? size[ua] > size[ub] : first[ua] < first[ub];
  });
  std::vector<int> remap(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) remap[static_cast<std::size_t>(order[r])] = static_cast<int>(r);

  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(res.num_clusters, vectors.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int l = res.labels[static_cast<std::size_t>(i)];
    labels[static_cast<std::size_t>(i)] = l < 0 ? -1 : remap[static_cast<std::size_t>(l)];
    if (l >= 0) centroids.row(remap[static_cast<std::size_t>(l)]) += vectors.row(i);
  }
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double norm = centroids.row(c).norm();
    if (norm > 0.0) centroids.row(c) /= norm;
  }
  std::int64_t attached = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& l = labels[static_cast<std::size_t>(i)];
    if (l >= 0) continue;
    ++attached;
    const double norm = vectors.row(i).norm();
    if (norm == 0.0) {
      l = 0;
      continue;
    }
    const Eigen::VectorXd sims = centroids * vectors.row(i).transpose() / norm;
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < sims.size(); ++c) {
      if (sims(c) > sims(best)) best = c;
    }
    l = static_cast<int>(best);
  }
  if (attached_noise) *attached_noise = attached;
  return labels;
}

namespace {

std::vector<std::vector<std::size_t>> members_by_label(const std::vector<int>& labels) {
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(i);
  return out;
}

void assign_terms(std::vector<MessageCluster*> clusters, const std::vector<std::string>& ids,
                  const std::vector<std::string>& texts, int k) {
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < ids.size(); ++i) row_of.emplace(ids[i], i);
  std::vector<std::vector<std::string>> docs;
  for (const auto* c : clusters) {
    std::vector<std::string> d;
    for (const auto& id : c->member_ids) d.push_back(texts[row_of.at(id)]);
    docs.push_back(std::move(d));
  }
  auto terms = class_tfidf_terms(docs, k);
  for (std::size_t i = 0; i < clusters.size(); ++i) clusters[i]->top_terms = std::move(terms[i]);
}

}  // namespace

ClusterHierarchy cluster_two_level(const Eigen::MatrixXd& vectors, const std::vector<std::string>& ids,
                                   const std::vector<std::string>& texts, const ClusterParams& params) {
  params.validate();
  if (vectors.rows() == 0) throw Error("no messages to cluster", "clusters");
  if (static_cast<std::size_t>(vectors.rows()) != ids.size() || ids.size() != texts.size()) {
    throw Error("vectors, ids and texts must have the same length", "clusters");
  }
  ClusterHierarchy h;
  std::int64_t noise = 0;
  const auto level1 = members_by_label(cluster_level(vectors, params, &noise));
  h.attached_noise += noise;
  int next_id = static_cast<int>(level1.size());
  for (std::size_t c = 0; c < level1.size(); ++c) {
    MessageCluster mc;
    mc.cluster_id = static_cast<int>(c);
    for (auto i : level1[c]) mc.member_ids.push_back(ids[i]);
    h.level1.push_back(mc);

    std::vector<std::vector<std::size_t>> children;
    if (level1[c].size() > static_cast<std::size_t>(params.level2_threshold)) {
      std::vector<Eigen::Index> rows(level1[c].begin(), level1[c].end());
      const Eigen::MatrixXd sub = vectors(rows, Eigen::all);
      std::int64_t sub_noise = 0;
      children = members_by_label(cluster_level(sub, params, &sub_noise));
      if (children.size() > 1) h.attached_noise += sub_noise;
    }
    if (children.size() <= 1) {
      h.leaves.push_back(mc);
      continue;
    }
    for (const auto& child : children) {
      MessageCluster sc;
      sc.cluster_id = next_id++;
      sc.level = 2;
      sc.parent_id = mc.cluster_id;
      for (auto local : child) sc.member_ids.push_back(ids[level1[c][local]]);
      h.level2.push_back(sc);
      h.leaves.push_back(sc);
    }
  }
  std::vector<MessageCluster*> l1, leaves;
  for (auto& c : h.level1) l1.push_back(&c);
  for (auto& c : h.leaves) leaves.push_back(&c);
  assign_terms(l1, ids, texts, params.top_terms);
  assign_terms(leaves, ids, texts, params.top_terms);
  for (auto& c : h.level2) {
    for (const auto& leaf : h.leaves) {
      if (leaf.cluster_id == c.cluster_id) c.top_terms = leaf.top_terms;
    }
  }
  return h;
}

bool is_stopword(const std::string& token) {
  static const std::unordered_set<std::string> kStop = {
      // English
      "a", "about", "after", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be", "because", "been",
      "before", "being", "but", "by", "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he",
      "her", "here", "him", "his", "how", "i", "if", "in", "into", "is", "it", "its", "just", "me", "more", "most",
      "my", "no", "not", "now", "of", "on", "one", "only", "or", "our", "out", "over", "so", "some", "than", "that",
      "the", "their", "them", "then", "there", "these", "they", "this", "those", "to", "too", "up", "us", "very",
      "was", "we", "were", "what", "when", "where", "which", "who", "why", "will", "with", "would", "you", "your",
      "rt", "amp", "via",
      // French
      "au", "aux", "avec", "ce", "ces", "cette", "dans", "de", "des", "du", "elle", "en", "est", "et", "eux", "il",
      "ils", "je", "la", "le", "les", "leur", "lui", "ma", "mais", "me", "mes", "moi", "mon", "ne", "nos", "notre",
      "nous", "on", "ont", "ou", "par", "pas", "plus", "pour", "qu", "que", "qui", "sa", "se", "ses", "son", "sont",
      "sur", "ta", "te", "tes", "toi", "ton", "tu", "un", "une", "vos", "votre", "vous", "c", "d", "j", "l", "m", "n",
      "s", "t", "y", "été", "être", "fait", "faire", "comme", "tout", "tous", "si", "ça", "cela"};
  return kStop.count(token) > 0;
}

std::vector<std::vector<std::string>> class_tfidf_terms(const std::vector<std::vector<std::string>>& cluster_texts,
                                                        int k) {
  std::vector<std::map<std::string, double>> tf(cluster_texts.size());
  std::vector<double> totals(cluster_texts.size(), 0.0);
  std::unordered_map<std::string, double> freq;
  for (std::size_t c = 0; c < cluster_texts.size(); ++c) {
    for (const auto& text : cluster_texts[c]) {
      for (const auto& tok : word_tokens(text)) {
        if (tok.size() < 2 || is_stopword(tok)) continue;
        tf[c][tok] += 1.0;
        totals[c] += 1.0;
        freq[tok] += 1.0;
      }
    }
  }
  const double avg = cluster_texts.empty()
                         ? 0.0
                         : std::accumulate(totals.begin(), totals.end(), 0.0) / static_cast<double>(cluster_texts.size());
  std::vector<std::vector<std::string>> out(cluster_texts.size());
  for (std::size_t c = 0; c < cluster_texts.size(); ++c) {
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& [tok, count] : tf[c]) {
      scored.emplace_back((count / totals[c]) * std::log(1.0 + avg / freq[tok]), tok);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t i = 0; i < scored.size() && i < static_cast<std::size_t>(k); ++i) out[c].push_back(scored[i].second);
  }
  return out;
}

std::string clusters_table(const std::vector<MessageCluster>& clusters) {
  std::ostringstream out;
  out << "cluster_id\tlevel\tparent_id\tsize\ttop_terms\n";
  for (const auto& c : clusters) {
    out << c.cluster_id << '\t' << c.level << '\t' << c.parent_id << '\t' << c.size() << '\t';
    for (std::size_t i = 0; i < c.top_terms.size(); ++i) out << (i ? " " : "") << c.top_terms[i];
    out << '\n';
  }
  return out.str();
}

json to_json(const MessageCluster& c) {
  return {{"cluster_id", c.cluster_id}, {"level", c.level},         {"parent_id", c.parent_id},
          {"size", c.size()},           {"top_terms", c.top_terms}, {"member_ids", c.member_ids}};
}

MessageCluster message_cluster_from_json(const json& j) {
  MessageCluster c;
  c.cluster_id = j.at("cluster_id");
  c.level = j.at("level");
  c.parent_id = j.at("parent_id");
  c.top_terms = j.at("top_terms").get<std::vector<std::string>>();
  c.member_ids = j.at("member_ids").get<std::vector<std::string>>();
  return c;
}

json to_json(const ClusterHierarchy& h) {
  auto list = [](const std::vector<MessageCluster>& v) {
    json a = json::array();
    for (const auto& c : v) a.push_back(to_json(c));
    return a;
  };
  return {{"level1", list(h.level1)}, {"level2", list(h.level2)}, {"leaves", list(h.leaves)},
          {"attached_noise", h.attached_noise}};
}

ClusterHierarchy hierarchy_from_json(const json& j) {
  ClusterHierarchy h;
  for (const auto& c : j.at("level1")) h.level1.push_back(message_cluster_from_json(c));
  for (const auto& c : j.at("level2")) h.level2.push_back(message_cluster_from_json(c));
  for (const auto& c : j.at("leaves")) h.leaves.push_back(message_cluster_from_json(c));
  h.attached_noise = j.value("attached_noise", std::int64_t{0});
  return h;
}

}  // namespace convo
