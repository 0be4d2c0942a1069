#include "convo/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

#include "convo/error.hpp"
#include "convo/llm_client.hpp"
#include "convo/report.hpp"
#include "convo/text.hpp"

namespace convo {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kStageNames[kStageCount] = {"ingest",  "hashtag-groups", "convo",        "influencers",
                                                  "network", "clusters",       "characterize", "report"};

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

json grouping_to_json(const GroupingParams& g) {
  return {{"top_n", g.top_n},
          {"target_dim", g.target_dim},
          {"n_neighbors", g.n_neighbors},
          {"min_cluster_size", g.min_cluster_size},
          {"min_samples", g.min_samples},
          {"bypass_small_vocab", g.bypass_small_vocab},
          {"bypass_below", g.bypass_below}};
}

json lda_to_json(const LdaParams& p) {
  return {{"topics", p.topics}, {"iterations", p.iterations}, {"alpha", p.alpha}, {"beta", p.beta}};
}

InfluencerProfile profile_from_json(const json& p) {
  return {p.at("author_id"), p.at("rank"), p.at("tweets_in_convo"), p.at("received_retweets_in_convo")};
}

InfluencerStats stats_from_json(const json& j) {
  InfluencerStats s;
  s.influencer_count = j.at("influencers");
  s.convo_authors = j.at("convo_authors");
  s.influencer_tweets = j.at("influencer_tweets");
  s.convo_tweets = j.at("convo_tweets");
  s.influencer_retweets = j.at("influencer_retweets");
  s.convo_retweets = j.at("convo_retweets");
  return s;
}

CoordinationMetrics metrics_from_json(const json& j) {
  CoordinationMetrics m;
  m.edge_density = j.at("edge_density");
  m.edge_count = j.at("edge_count");
  m.connected_pairs = j.at("connected_pairs");
  m.bidirectional_pairs = j.at("bidirectional_pairs");
  m.reciprocity = j.at("reciprocity");
  m.self_loop_nodes = j.at("self_loop_nodes");
  m.self_retweets = j.at("self_retweets");
  m.connected_nodes = j.at("connected_nodes");
  m.influencer_tweet_share = j.at("influencer_tweet_share");
  m.operation_score = j.at("operation_score");
  m.degenerate = j.at("degenerate");
  return m;
}

struct ConvoState {
  std::vector<InfluencerProfile> profiles;
  InfluencerStats stats;
  InfluencerNetwork network;
  CoordinationMetrics metrics;
  ClusterHierarchy hierarchy;
  std::string embed_provider;
  bool embed_fell_back = false;
  std::vector<ClusterCharacterization> characterizations;
};

struct RunState {
  Corpus corpus;
  GroupingResult groups;
  std::map<std::string, int> doc_topics;
  std::vector<Convo> convos;
  std::vector<ConvoState> per;
};

class Runner {
 public:
  Runner(const PipelineConfig& cfg, const RunOptions& opts, RunOutcome& out)
      : cfg_(cfg), opts_(opts), out_(out), cache_(cfg.effective_cache_dir()) {}

  bool wants(Stage s) const { return static_cast<int>(s) <= static_cast<int>(opts_.last); }

  /// Restores `s` from cache when resuming with a matching input hash,
  /// otherwise computes and caches it. Returns the stage's input hash.
  std::uint64_t stage(Stage s, std::uint64_t input_hash, const std::function<json()>& compute,
                      const std::function<void(const json&)>& restore) {
    const std::string name = stage_name(s);
    const fs::path path = cache_ / (std::to_string(static_cast<int>(s)) + "-" + name + ".json");
    const std::string key = hex64(input_hash);
    try {
      if (opts_.resume && fs::exists(path)) {
        const json cached = json::parse(read_file(path), nullptr, false);
        if (!cached.is_discarded() && cached.value("input_hash", std::string{}) == key) {
          restore(cached.at("data"));
          out_.loaded.push_back(name);
          return input_hash;
        }
      }
      json data = compute();
      write_file(path, dump_json({{"stage", name}, {"input_hash", key}, {"data", std::move(data)}}));
      out_.computed.push_back(name);
      log::info("stage " + name + " done");
      return input_hash;
    } catch (const Error& e) {
      throw Error(e.what(), name);
    } catch (const std::exception& e) {
      throw Error(e.what(), name);
    }
  }

 private:
  const PipelineConfig& cfg_;
  const RunOptions& opts_;
  RunOutcome& out_;
  fs::path cache_;
};

std::uint64_t chain(std::uint64_t prev, const json& j) { return fnv1a64(j.dump(), prev); }

std::vector<const Message*> convo_messages(const Corpus& corpus, const Convo& c) {
  std::vector<const Message*> out;
  out.reserve(c.message_ids.size());
  for (const auto& id : c.message_ids) {
    if (const Message* m = corpus.find(id)) out.push_back(m);
  }
  return out;
}

json time_range(const Corpus& corpus) {
  std::optional<std::int64_t> lo, hi;
  for (const auto& m : corpus.messages) {
    if (!m.timestamp) continue;
    lo = lo ? std::min(*lo, *m.timestamp) : *m.timestamp;
    hi = hi ? std::max(*hi, *m.timestamp) : *m.timestamp;
  }
  return {{"first", lo ? json(*lo) : json(nullptr)}, {"last", hi ? json(*hi) : json(nullptr)}};
}

json report_snapshot(const ConvoSnapshot& s) {
  json j = to_json(s);
  j.erase("raw_reply");
  return j;
}

}  // namespace

const char* stage_name(Stage s) { return kStageNames[static_cast<int>(s)]; }

std::optional<Stage> parse_stage(std::string_view name) {
  if (name == "groups") return Stage::kGroups;
  for (int i = 0; i < kStageCount; ++i) {
    if (name == kStageNames[i]) return static_cast<Stage>(i);
  }
  return std::nullopt;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string dump_json(const json& j) { return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n"; }

std::string message_prompt_text(const Message& m) {
  std::string out = m.clean_text;
  for (const auto& h : m.hashtags) out += (out.empty() ? "#" : " #") + h;
  return out;
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
  PipelineConfig c;
  if (!j.is_object()) throw Error("config must be a JSON object");
  c.input = resolve(base_dir, j.value("input", std::string{}));
  if (j.contains("schema_map")) {
    const auto& s = j["schema_map"];
    c.schema = s.is_string() && s.get<std::string>() == "default" ? SchemaMap{} : SchemaMap::from_json(s);
  }
  c.out_dir = resolve(base_dir, j.value("out_dir", std::string("out")));
  if (j.contains("cache_dir")) c.cache_dir = resolve(base_dir, j["cache_dir"].get<std::string>());
  c.seed = j.value("seed", c.seed);
  c.terms = j.value("terms", std::vector<std::string>{});
  c.top_k = j.value("top_k", c.top_k);
  if (j.contains("grouping")) {
    const auto& g = j["grouping"];
    c.grouping_method = g.value("method", c.grouping_method);
    c.grouping.top_n = g.value("top_n", c.grouping.top_n);
    c.grouping.target_dim = g.value("target_dim", c.grouping.target_dim);
    c.grouping.n_neighbors = g.value("n_neighbors", c.grouping.n_neighbors);
    c.grouping.min_cluster_size = g.value("min_cluster_size", c.grouping.min_cluster_size);
    c.grouping.min_samples = g.value("min_samples", c.grouping.min_samples);
    c.grouping.bypass_small_vocab = g.value("bypass_small_vocab", c.grouping.bypass_small_vocab);
    c.grouping.bypass_below = g.value("bypass_below", c.grouping.bypass_below);
  }
  if (j.contains("lda")) {
    const auto& l = j["lda"];
    c.lda.topics = l.value("topics", c.lda.topics);
    c.lda.iterations = l.value("iterations", c.lda.iterations);
    c.lda.alpha = l.value("alpha", c.lda.alpha);
    c.lda.beta = l.value("beta", c.lda.beta);
  }
  if (j.contains("coordination")) {
    const auto& k = j["coordination"];
    c.weights.density = k.value("density_weight", c.weights.density);
    c.weights.reciprocity = k.value("reciprocity_weight", c.weights.reciprocity);
    c.weights.tweet_share = k.value("tweet_share_weight", c.weights.tweet_share);
    c.operation_threshold = k.value("threshold", c.operation_threshold);
  }
  if (j.contains("embedding")) c.embedding = EmbeddingConfig::from_json(j["embedding"]);
  if (j.contains("clusters")) c.clusters = ClusterParams::from_json(j["clusters"]);
  if (j.contains("llm")) c.llm = LlmConfig::from_json(j["llm"]);
  if (j.contains("prompts_dir")) c.prompts_dir = resolve(base_dir, j["prompts_dir"].get<std::string>());
  if (j.contains("lexicon")) c.lexicon = resolve(base_dir, j["lexicon"].get<std::string>());
  if (j.contains("mock_llm") && !j["mock_llm"].is_null()) c.mock_llm = resolve(base_dir, j["mock_llm"].get<std::string>());
  c.record_wall_clock = j.value("record_wall_clock", c.record_wall_clock);
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  const json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error("config " + path.string() + " is not valid JSON");
  PipelineConfig c = from_json(j, path.parent_path());
  c.apply_env();
  return c;
}

void PipelineConfig::apply_env() {
  if (const char* v = std::getenv("CONVO_LLM_ENDPOINT"); v && *v) llm.endpoint = v;
  if (const char* v = std::getenv("CONVO_LLM_API_KEY"); v && *v) llm.api_key = v;
  if (const char* v = std::getenv("CONVO_LLM_MODEL"); v && *v) llm.model = v;
}

void PipelineConfig::validate() const {
  if (input.empty()) throw Error("config has no input corpus", "ingest");
  if (grouping_method != "hashtag" && grouping_method != "lda") {
    throw Error("grouping.method must be hashtag or lda", "hashtag-groups");
  }
  if (terms.empty()) throw Error("at least one term of interest is required", "convo");
  if (top_k < 1) throw Error("top_k must be >= 1", "influencers");
  if (!(operation_threshold >= 0.0 && operation_threshold <= 1.0)) {
    throw Error("coordination.threshold must lie in [0, 1]", "network");
  }
  schema.validate();
  embedding.validate();
  clusters.validate();
  llm.validate();
}

fs::path PipelineConfig::effective_cache_dir() const { return cache_dir.empty() ? out_dir / "cache" : cache_dir; }

json PipelineConfig::to_json() const {
  json j{{"schema_map", schema.to_json()},
         {"seed", seed},
         {"terms", terms},
         {"top_k", top_k},
         {"grouping", grouping_to_json(grouping)},
         {"coordination",
          {{"density_weight", weights.density},
           {"reciprocity_weight", weights.reciprocity},
           {"tweet_share_weight", weights.tweet_share},
           {"threshold", operation_threshold}}},
         {"embedding", embedding.to_json()},
         {"clusters", clusters.to_json()},
         {"llm", llm.to_json()},
         {"record_wall_clock", record_wall_clock}};
  j["grouping"]["method"] = grouping_method;
  if (grouping_method == "lda") j["lda"] = lda_to_json(lda);
  j["embedding"].erase("api_key");
  return j;
}

std::uint64_t PipelineConfig::hash() const {
  std::uint64_t h = fnv1a64(to_json().dump());
  // Contents rather than paths, so relocating a run keeps its hash.
  if (fs::exists(input)) h = fnv1a64(read_file(input), h);
  if (!prompts_dir.empty()) h = fnv1a64(hex64(PromptBundle::load(prompts_dir).fingerprint()), h);
  if (!lexicon.empty() && fs::exists(lexicon)) h = fnv1a64(read_file(lexicon), h);
  if (mock_llm && fs::exists(*mock_llm)) h = fnv1a64(read_file(*mock_llm), h);
  return h;
}

RunOutcome run_pipeline(const PipelineConfig& cfg_in, const RunOptions& opts) {
  PipelineConfig cfg = cfg_in;
  cfg.validate();
  cfg.grouping.seed = cfg.seed;
  cfg.lda.seed = cfg.seed;
  cfg.clusters.seed = cfg.seed;

  RunOutcome out;
  Runner run(cfg, opts, out);
  RunState st;
  const PromptBundle prompts = cfg.prompts_dir.empty() ? PromptBundle::defaults() : PromptBundle::load(cfg.prompts_dir);
  prompts.validate();
  const PolarityLexicon lexicon = cfg.lexicon.empty() ? PolarityLexicon::builtin() : PolarityLexicon::load(cfg.lexicon);
  std::vector<std::string> failed_chunks;

  // ingest
  if (!fs::exists(cfg.input)) throw Error("input corpus " + cfg.input.string() + " does not exist", "ingest");
  std::uint64_t h = fnv1a64(read_file(cfg.input), fnv1a64(cfg.schema.to_json().dump()));
  run.stage(
      Stage::kIngest, h,
      [&] {
        st.corpus = filter_messages(resolve_retweets(parse_corpus(cfg.input, cfg.schema)));
        check_corpus_invariants(st.corpus);
        return corpus_to_json(st.corpus);
      },
      [&](const json& j) { st.corpus = corpus_from_json(j); });

  std::vector<Stage> reached{Stage::kIngest};

  // hashtag-groups
  if (run.wants(Stage::kGroups)) {
    json params{{"method", cfg.grouping_method}, {"seed", cfg.seed}};
    params["params"] = cfg.grouping_method == "lda" ? lda_to_json(cfg.lda) : grouping_to_json(cfg.grouping);
    h = chain(h, params);
    run.stage(
        Stage::kGroups, h,
        [&] {
          json doc_topics = json::object();
          if (cfg.grouping_method == "lda") {
            const TopicModel model = fit_lda(st.corpus, cfg.lda);
            st.groups.groups = topic_groups(model);
            for (std::size_t d = 0; d < model.doc_ids.size(); ++d) {
              st.doc_topics[model.doc_ids[d]] = model.dominant_topic(d);
            }
            doc_topics = st.doc_topics;
          } else {
            st.groups = build_hashtag_groups(st.corpus, cfg.grouping);
          }
          json groups = json::array();
          for (const auto& g : st.groups.groups) groups.push_back(to_json(g));
          return json{{"groups", groups}, {"noise", st.groups.noise}, {"reduced", st.groups.reduced},
                      {"doc_topics", doc_topics}};
        },
        [&](const json& j) {
          for (const auto& g : j.at("groups")) st.groups.groups.push_back(group_from_json(g));
          st.groups.noise = j.at("noise").get<std::vector<std::string>>();
          st.groups.reduced = j.at("reduced");
          st.doc_topics = j.at("doc_topics").get<std::map<std::string, int>>();
        });
    reached.push_back(Stage::kGroups);
  }

  // convo
  std::string convo_diagnostic;
  if (run.wants(Stage::kConvo)) {
    h = chain(h, cfg.terms);
    run.stage(
        Stage::kConvo, h,
        [&] {
          ConvoSearch found;
          if (cfg.grouping_method == "lda") {
            std::vector<std::string> wanted;
            for (const auto& t : cfg.terms) wanted.push_back(canonical_tag(t));
            for (const auto& g : st.groups.groups) {
              std::vector<std::string> matched;
              for (const auto& w : wanted) {
                if (g.contains(w)) matched.push_back(w);
              }
              if (matched.empty()) continue;
              std::vector<const Message*> members;
              for (const Message* m : st.corpus.originals()) {
                const auto it = st.doc_topics.find(m->id);
                if (it != st.doc_topics.end() && it->second == g.group_id) members.push_back(m);
              }
              found.convos.push_back(make_convo(g, members, matched));
            }
            if (found.convos.empty()) found.diagnostic = "no topic's top words contain any of the terms";
          } else {
            found = find_convos(st.corpus, st.groups.groups, cfg.terms);
          }
          if (found.convos.empty()) throw Error(found.diagnostic);
          st.convos = std::move(found.convos);
          json convos = json::array();
          for (const auto& c : st.convos) convos.push_back(to_json(c));
          return json{{"convos", convos}};
        },
        [&](const json& j) {
          for (const auto& c : j.at("convos")) st.convos.push_back(convo_from_json(c));
        });
    st.per.resize(st.convos.size());
    reached.push_back(Stage::kConvo);
  }

  // influencers
  if (run.wants(Stage::kInfluencers)) {
    h = chain(h, {{"top_k", cfg.top_k}});
    run.stage(
        Stage::kInfluencers, h,
        [&] {
          json per = json::array();
          for (std::size_t i = 0; i < st.convos.size(); ++i) {
            auto& cs = st.per[i];
            cs.profiles = top_influencers(st.convos[i], Selection::fixed(cfg.top_k));
            cs.stats = influencer_stats(st.convos[i], cs.profiles);
            json profiles = json::array();
            for (const auto& p : cs.profiles) profiles.push_back(to_json(p));
            per.push_back({{"profiles", profiles}, {"stats", to_json(cs.stats)}});
          }
          return per;
        },
        [&](const json& j) {
          for (std::size_t i = 0; i < st.convos.size(); ++i) {
            for (const auto& p : j.at(i).at("profiles")) st.per[i].profiles.push_back(profile_from_json(p));
            st.per[i].stats = stats_from_json(j.at(i).at("stats"));
          }
        });
    reached.push_back(Stage::kInfluencers);
  }

  // network
  if (run.wants(Stage::kNetwork)) {
    h = chain(h, {{"weights", {cfg.weights.density, cfg.weights.reciprocity, cfg.weights.tweet_share}},
                  {"threshold", cfg.operation_threshold}});
    run.stage(
        Stage::kNetwork, h,
        [&] {
          json per = json::array();
          for (auto& cs : st.per) {
            cs.network = build_network(st.corpus, cs.profiles);
            cs.metrics = coordination_metrics(cs.network, cs.stats, cfg.weights);
            per.push_back({{"network", to_json(cs.network)}, {"metrics", to_json(cs.metrics)}});
          }
          return per;
        },
        [&](const json& j) {
          for (std::size_t i = 0; i < st.per.size(); ++i) {
            st.per[i].network = network_from_json(j.at(i).at("network"));
            st.per[i].metrics = metrics_from_json(j.at(i).at("metrics"));
          }
        });
    reached.push_back(Stage::kNetwork);
  }

  // clusters
  if (run.wants(Stage::kClusters)) {
    h = chain(h, {{"embedding", cfg.embedding.to_json()}, {"clusters", cfg.clusters.to_json()}});
    run.stage(
        Stage::kClusters, h,
        [&] {
          json per = json::array();
          for (std::size_t i = 0; i < st.convos.size(); ++i) {
            auto& cs = st.per[i];
            std::unordered_set<std::string> influencers;
            for (const auto& p : cs.profiles) influencers.insert(p.author_id);
            std::vector<std::string> ids, texts;
            for (const Message* m : convo_messages(st.corpus, st.convos[i])) {
              if (!influencers.count(m->author_id)) continue;
              ids.push_back(m->id);
              texts.push_back(message_prompt_text(*m));
            }
            if (ids.empty()) throw Error("convo " + std::to_string(i) + " has no influencer messages");
            const EmbedResult emb = embed_messages(texts, cfg.embedding);
            cs.embed_provider = emb.provider;
            cs.embed_fell_back = emb.fell_back;
            cs.hierarchy = cluster_two_level(emb.vectors, ids, texts, cfg.clusters);
            per.push_back({{"provider", cs.embed_provider}, {"fell_back", cs.embed_fell_back},
                           {"hierarchy", to_json(cs.hierarchy)}});
          }
          return per;
        },
        [&](const json& j) {
          for (std::size_t i = 0; i < st.per.size(); ++i) {
            st.per[i].embed_provider = j.at(i).at("provider");
            st.per[i].embed_fell_back = j.at(i).at("fell_back");
            st.per[i].hierarchy = hierarchy_from_json(j.at(i).at("hierarchy"));
          }
        });
    reached.push_back(Stage::kClusters);
  }

  // characterize
  if (run.wants(Stage::kCharacterize)) {
    json llm_key = cfg.llm.to_json();
    if (cfg.mock_llm) llm_key["endpoint"] = "mock:" + hex64(fnv1a64(read_file(*cfg.mock_llm)));
    h = chain(h, {{"llm", llm_key}, {"prompts", hex64(prompts.fingerprint())}});
    run.stage(
        Stage::kCharacterize, h,
        [&] {
          std::unique_ptr<MockLlmServer> mock;
          LlmConfig llm = cfg.llm;
          if (cfg.mock_llm) {
            mock = std::make_unique<MockLlmServer>(MockScript::load(*cfg.mock_llm));
            llm.endpoint = mock->chat_url();
          }
          const LlmClient client(std::make_shared<HttpChatTransport>(llm.endpoint, llm.api_key, llm.timeout),
                                 llm.sampling(), llm.retry_policy());
          const int budget = chunk_budget(prompts, llm);
          json per = json::array();
          for (std::size_t i = 0; i < st.convos.size(); ++i) {
            auto& cs = st.per[i];
            json audit = json::array();
            json chars = json::array();
            for (const auto& cluster : cs.hierarchy.leaves) {
              std::vector<PackItem> items;
              for (const auto& id : cluster.member_ids) {
                const Message* m = st.corpus.find(id);
                if (m) items.push_back({m->id, message_prompt_text(*m), m->retweet_count});
              }
              const auto chunks = pack_messages(std::move(items), budget);
              auto cc = characterize_cluster(cluster.cluster_id, chunks, prompts, llm, client);
              audit.push_back({{"cluster_id", cluster.cluster_id},
                               {"chunks", to_json(cc)["chunks"]},
                               {"summary_raw", cc.summary_raw}});
              chars.push_back(to_json(cc));
              cs.characterizations.push_back(std::move(cc));
            }
            write_file(cfg.out_dir / "audit" / ("convo" + std::to_string(i) + ".json"), dump_json(audit));
            per.push_back(chars);
          }
          return per;
        },
        [&](const json& j) {
          for (std::size_t i = 0; i < st.per.size(); ++i) {
            for (const auto& c : j.at(i)) st.per[i].characterizations.push_back(characterization_from_json(c));
          }
        });
    reached.push_back(Stage::kCharacterize);
  }

  // report
  try {
    json stages = json::array();
    for (Stage s : reached) stages.push_back(stage_name(s));
    if (opts.last == Stage::kReport) stages.push_back(stage_name(Stage::kReport));
    json report;
    report["schema_version"] = kReportSchemaVersion;
    report["run"] = {{"config_hash", hex64(cfg.hash())},
                     {"seed", cfg.seed},
                     {"stages", stages},
                     {"last_stage", stage_name(opts.last)},
                     {"corpus_time_range", time_range(st.corpus)}};
    if (cfg.record_wall_clock) {
      const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      char buf[32];
      std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
      report["run"]["generated_at"] = buf;
    }
    const auto& cst = st.corpus.stats;
    report["corpus"] = {{"raw", cst.raw},
                        {"skipped", cst.skipped},
                        {"originals", cst.originals},
                        {"retweet_records", cst.retweet_records},
                        {"resolved_retweets", cst.resolved_retweets},
                        {"dangling", cst.dangling},
                        {"cycles", cst.cycles},
                        {"retained", cst.retained},
                        {"dropped_filter", cst.dropped_filter}};
    json diagnostics{{"dangling_retweets", cst.dangling},
                     {"retweet_cycles", cst.cycles},
                     {"skipped_records", cst.skipped},
                     {"skipped_samples", cst.skipped_samples}};
    json failed = json::array();
    bool fell_back = false;

    if (run.wants(Stage::kGroups)) {
      json groups = json::array();
      for (const auto& g : st.groups.groups) groups.push_back(to_json(g));
      report["groups"] = {{"method", cfg.grouping_method},
                          {"reduced", st.groups.reduced},
                          {"count", st.groups.groups.size()},
                          {"groups", groups},
                          {"noise", st.groups.noise}};
    }
    if (run.wants(Stage::kConvo)) {
      json convos = json::array();
      for (std::size_t i = 0; i < st.convos.size(); ++i) {
        const Convo& c = st.convos[i];
        const ConvoState& cs = st.per[i];
        json jc{{"index", i},
                {"anchor_terms", c.anchor_terms},
                {"group_id", c.source_group.group_id},
                {"group_exemplar", c.source_group.exemplar()},
                {"stats", {{"total_authors", c.total_authors()}, {"total_tweets", c.total_tweets},
                           {"total_retweets", c.total_retweets}}}};
        if (run.wants(Stage::kInfluencers)) {
          json profiles = json::array();
          for (const auto& p : cs.profiles) profiles.push_back(to_json(p));
          jc["influencers"] = profiles;
          const json s = to_json(cs.stats);
          for (const auto& [k, v] : s.items()) jc["stats"][k] = v;
        }
        if (run.wants(Stage::kNetwork)) {
          const std::string file = "graphs/network_convo" + std::to_string(i) + ".dot";
          const fs::path dot = cfg.out_dir / file;
          write_file(dot, export_network(cs.network, "convo" + std::to_string(i) + "_influencers"));
          out.graph_files.push_back(dot);
          json edges = json::array();
          for (const auto& [e, w] : cs.network.edges) {
            edges.push_back({{"src", InfluencerNetwork::label(e.first)}, {"dst", InfluencerNetwork::label(e.second)},
                             {"weight", w}});
          }
          json self = json::array();
          for (std::size_t n = 0; n < cs.network.self_loops.size(); ++n) {
            if (cs.network.self_loops[n] > 0) {
              self.push_back({{"node", InfluencerNetwork::label(static_cast<int>(n))}, {"count", cs.network.self_loops[n]}});
            }
          }
          jc["coordination"] = to_json(cs.metrics);
          jc["operation_flag"] = cs.metrics.flags_operation(cfg.operation_threshold);
          jc["network"] = {{"file", file}, {"nodes", cs.network.size()}, {"edges", edges}, {"self_retweets", self}};
        }
        if (run.wants(Stage::kClusters)) {
          json clusters = json::array();
          for (const auto& mc : cs.hierarchy.leaves) {
            clusters.push_back({{"cluster_id", mc.cluster_id},
                                {"level", mc.level},
                                {"parent_id", mc.parent_id},
                                {"size", mc.size()},
                                {"top_terms", mc.top_terms}});
          }
          jc["clusters"] = clusters;
          jc["embedding_provider"] = cs.embed_provider;
          fell_back = fell_back || cs.embed_fell_back;
        }
        if (run.wants(Stage::kCharacterize)) {
          json chars = json::array();
          for (const auto& cc : cs.characterizations) {
            json jcc{{"cluster_id", cc.cluster_id},
                     {"summary", cc.summary ? to_json(*cc.summary) : json(nullptr)},
                     {"snapshot", nullptr},
                     {"snapshot_file", nullptr},
                     {"failed_chunks", cc.failures.size()}};
            if (cc.snapshot) {
              const std::string file =
                  "graphs/snapshot_convo" + std::to_string(i) + "_cluster" + std::to_string(cc.cluster_id) + ".dot";
              const fs::path dot = cfg.out_dir / file;
              write_file(dot, export_snapshot(*cc.snapshot, lexicon));
              out.graph_files.push_back(dot);
              jcc["snapshot"] = report_snapshot(*cc.snapshot);
              jcc["snapshot_file"] = file;
            }
            for (const auto& f : cc.failures) {
              failed.push_back("convo " + std::to_string(i) + " cluster " + std::to_string(cc.cluster_id) + " " + f);
            }
            chars.push_back(std::move(jcc));
          }
          jc["characterizations"] = chars;
        }
        convos.push_back(std::move(jc));
      }
      report["convos"] = convos;
    }
    diagnostics["failed_chunks"] = failed;
    diagnostics["embedding_fallback"] = fell_back;
    report["diagnostics"] = diagnostics;

    out.report = report;
    out.report_path = cfg.out_dir / "report.json";
    write_file(out.report_path, dump_json(report));
    out.computed.push_back(stage_name(Stage::kReport));
  } catch (const Error& e) {
    throw Error(e.what(), "report");
  } catch (const std::exception& e) {
    throw Error(e.what(), "report");
  }
  return out;
}

}  // namespace convo
