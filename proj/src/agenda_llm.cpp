#include "convo/agenda_llm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "convo/error.hpp"
#include "convo/lenient_json.hpp"
#include "convo/text.hpp"

namespace convo {

using nlohmann::json;

namespace {

constexpr std::string_view kSlot = "{input_text}";
constexpr std::string_view kEllipsisMark = "\xE2\x80\xA6";

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + needle.size())) ++n;
  return n;
}

std::string fill_slot(std::string_view tmpl, std::string_view chunk) {
  const auto p = tmpl.find(kSlot);
  if (p == std::string_view::npos) return std::string(tmpl);
  std::string out(tmpl.substr(0, p));
  out.append(chunk);
  out.append(tmpl.substr(p + kSlot.size()));
  return out;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read prompt template " + p.string(), "characterize");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string s = ss.str();
  if (!s.empty() && s.back() == '\n') s.pop_back();
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

// Largest prefix of at most `max_bytes` that ends on a UTF-8 boundary.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes) {
  if (s.size() <= max_bytes) return s;
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return s.substr(0, cut);
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

std::string scalar_text(const json& v) {
  if (v.is_string()) return trim(v.get<std::string>());
  if (v.is_null()) return {};
  return v.dump();
}

const json* find_key(const json& obj, std::initializer_list<std::string_view> names) {
  for (const auto& [k, v] : obj.items()) {
    const std::string folded = casefold(trim(k));
    for (auto n : names) {
      if (folded == n) return &v;
    }
  }
  return nullptr;
}

}  // namespace

PromptBundle PromptBundle::defaults() {
  PromptBundle b;
  b.system =
      "You are a helpful, respectful and honest agenda detection assistant.\n"
      "Read the list of messages given and understand the hidden agendas behind them.\n"
      "\n"
      "Please do not share false information. If you are unable to understand the agenda,\n"
      "simply say \"No agenda\".";
  b.prompts = {"What are the top distinct entities (maximum 5) mentioned in several messages?",
               "What are the authors promoting about each entity? Give me 1 phrase for each.",
               "What are the emotions expressed towards each entity?",
               "Combine the entities, promoted actions and emotions in the output template."};
  b.output_template =
      "output = [\n"
      "{\n"
      "\"entity\": {entity},\n"
      "\"promoted_actions\": {action},\n"
      "\"emotions\": {emotion}\n"
      "},\n"
      "...\n"
      "]";
  b.summary =
      "What is the overall agenda behind this set of messages? Give me a short summary.\n"
      "Messages: {input_text}";
  b.messages_slot = "Messages: {input_text}";
  b.completion_stem = "The agenda behind this set of tweets is";
  return b;
}

PromptBundle PromptBundle::load(const std::filesystem::path& dir) {
  PromptBundle b;
  b.system = read_text(dir / "system.txt");
  for (std::size_t i = 0; i < b.prompts.size(); ++i) b.prompts[i] = read_text(dir / ("prompt" + std::to_string(i + 1) + ".txt"));
  b.output_template = read_text(dir / "output_template.txt");
  b.summary = read_text(dir / "summary.txt");
  b.completion_stem = read_text(dir / "completion_stem.txt");
  if (std::filesystem::exists(dir / "messages_slot.txt")) b.messages_slot = read_text(dir / "messages_slot.txt");
  b.validate();
  return b;
}

void PromptBundle::validate() const {
  auto need = [](const std::string& s, const char* what) {
    if (trim(s).empty()) throw Error(std::string("prompt template is empty: ") + what, "characterize");
  };
  need(system, "system");
  for (const auto& p : prompts) need(p, "prompt");
  need(output_template, "output_template");
  need(summary, "summary");
  need(messages_slot, "messages_slot");
  need(completion_stem, "completion_stem");
  if (count_occurrences(summary, kSlot) != 1) {
    throw Error("summary template must contain {input_text} exactly once", "characterize");
  }
  if (count_occurrences(messages_slot, kSlot) != 1) {
    throw Error("messages slot must contain {input_text} exactly once", "characterize");
  }
}

std::string PromptBundle::first_turn(std::string_view chunk) const {
  return prompts[0] + "\n" + fill_slot(messages_slot, chunk);
}

std::string PromptBundle::final_turn() const { return prompts[3] + "\n" + output_template; }

std::string PromptBundle::single_turn(std::string_view chunk) const {
  return prompts[0] + "\n" + prompts[1] + "\n" + prompts[2] + "\n" + final_turn() + "\n" + fill_slot(messages_slot, chunk);
}

std::string PromptBundle::summary_turn(std::string_view chunk) const { return fill_slot(summary, chunk); }

std::uint64_t PromptBundle::fingerprint() const {
  std::uint64_t h = fnv1a64(system);
  for (const auto& p : prompts) h = fnv1a64(p, fnv1a64("\x1f", h));
  for (const auto* s : {&output_template, &summary, &messages_slot, &completion_stem}) h = fnv1a64(*s, fnv1a64("\x1f", h));
  return h;
}

void LlmConfig::validate() const {
  if (!(nucleus_p > 0.0 && nucleus_p <= 1.0)) throw Error("nucleus_p must be in (0, 1]", "characterize");
  if (max_new_tokens < 1) throw Error("max_new_tokens must be >= 1", "characterize");
  if (max_new_tokens >= context_budget_tokens) {
    throw Error("max_new_tokens must be below context_budget_tokens", "characterize");
  }
  if (retry < 0) throw Error("retry must be >= 0", "characterize");
  if (in_flight < 1) throw Error("in_flight must be >= 1", "characterize");
  if (!(headroom >= 0.0 && headroom < 1.0)) throw Error("headroom must be in [0, 1)", "characterize");
  if (timeout.count() <= 0) throw Error("timeout must be positive", "characterize");
}

SamplingParams LlmConfig::sampling() const { return {model, nucleus_p, max_new_tokens}; }

RetryPolicy LlmConfig::retry_policy() const { return {retry, backoff}; }

LlmConfig LlmConfig::from_json(const json& j) {
  LlmConfig c;
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model = j.value("model", c.model);
  c.api_key = j.value("api_key", c.api_key);
  c.context_budget_tokens = j.value("context_budget_tokens", c.context_budget_tokens);
  c.max_new_tokens = j.value("max_new_tokens", c.max_new_tokens);
  c.nucleus_p = j.value("nucleus_p", c.nucleus_p);
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<std::int64_t>(c.timeout.count())));
  c.retry = j.value("retry", c.retry);
  c.backoff = std::chrono::milliseconds(j.value("backoff_ms", static_cast<std::int64_t>(c.backoff.count())));
  c.in_flight = j.value("in_flight", c.in_flight);
  c.multi_turn = j.value("multi_turn", c.multi_turn);
  c.summary_prefill = j.value("summary_prefill", c.summary_prefill);
  c.headroom = j.value("headroom", c.headroom);
  c.validate();
  return c;
}

json LlmConfig::to_json() const {
  return {{"endpoint", endpoint},
          {"model", model},
          {"context_budget_tokens", context_budget_tokens},
          {"max_new_tokens", max_new_tokens},
          {"nucleus_p", nucleus_p},
          {"timeout_ms", timeout.count()},
          {"retry", retry},
          {"backoff_ms", backoff.count()},
          {"in_flight", in_flight},
          {"multi_turn", multi_turn},
          {"summary_prefill", summary_prefill},
          {"headroom", headroom}};
}

int estimate_tokens(std::string_view text) { return static_cast<int>((text.size() + 3) / 4); }

int request_tokens(const std::vector<ChatMessage>& messages) {
  int total = 0;
  for (const auto& m : messages) total += estimate_tokens(m.content);
  return total;
}

int chunk_budget(const PromptBundle& bundle, const LlmConfig& cfg) {
  cfg.validate();
  const int usable = static_cast<int>(std::floor(cfg.context_budget_tokens * (1.0 - cfg.headroom)));
  int chain = 0;
  if (cfg.multi_turn) {
    // Prompt 1 with an empty slot, Prompts 2-3, Prompt 4 and three kept replies plus the new one.
    chain = request_tokens({{"system", bundle.system},
                            {"user", bundle.first_turn("")},
                            {"user", bundle.prompts[1]},
                            {"user", bundle.prompts[2]},
                            {"user", bundle.final_turn()}}) +
            4 * cfg.max_new_tokens;
  } else {
    chain = request_tokens({{"system", bundle.system}, {"user", bundle.single_turn("")}}) + cfg.max_new_tokens;
  }
  int summary = request_tokens({{"system", bundle.system}, {"user", bundle.summary_turn("")}}) + cfg.max_new_tokens;
  if (cfg.summary_prefill) summary += estimate_tokens(bundle.completion_stem);
  const int budget = usable - std::max(chain, summary);
  if (budget < 1) {
    throw Error("context budget of " + std::to_string(cfg.context_budget_tokens) +
                    " tokens cannot hold the prompt templates and reply reservations",
                "characterize");
  }
  return budget;
}

std::string truncate_to_budget(std::string_view text, int budget) {
  const std::size_t cap = static_cast<std::size_t>(std::max(budget, 1)) * 4;
  if (text.size() <= cap) return std::string(text);
  const std::size_t room = cap > kEllipsisMark.size() ? cap - kEllipsisMark.size() : 0;
  std::string_view head = utf8_prefix(text, room);
  if (const auto sp = head.rfind(' '); sp != std::string_view::npos && sp > 0) head = head.substr(0, sp);
  std::string out(head);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  out.append(kEllipsisMark);
  return out;
}

std::vector<Chunk> pack_messages(std::vector<PackItem> items, int budget) {
  if (items.empty()) throw Error("cannot pack an empty message cluster", "characterize");
  if (budget < 1) throw Error("chunk budget must be >= 1 token", "characterize");
  std::stable_sort(items.begin(), items.end(), [](const PackItem& a, const PackItem& b) {
    return a.retweet_count != b.retweet_count ? a.retweet_count > b.retweet_count : a.id < b.id;
  });
  std::vector<Chunk> chunks;
  Chunk cur;
  auto flush = [&] {
    if (cur.message_ids.empty()) return;
    cur.index = static_cast<int>(chunks.size());
    chunks.push_back(std::move(cur));
    cur = Chunk{};
  };
  for (const auto& item : items) {
    std::string line = item.text;
    std::replace(line.begin(), line.end(), '\n', ' ');
    std::replace(line.begin(), line.end(), '\r', ' ');
    line = trim(line);
    bool truncated = false;
    if (estimate_tokens(line) > budget) {
      line = truncate_to_budget(line, budget);
      truncated = true;
    }
    const std::size_t extra = cur.message_ids.empty() ? line.size() : line.size() + 1;
    if (!cur.message_ids.empty() && static_cast<int>((cur.text.size() + extra + 3) / 4) > budget) {
      flush();
    }
    if (!cur.message_ids.empty()) cur.text.push_back('\n');
    cur.text += line;
    cur.message_ids.push_back(item.id);
    if (truncated) cur.truncated_ids.push_back(item.id);
  }
  flush();
  return chunks;
}

ChainResult run_prompt_chain(std::string_view chunk, const PromptBundle& bundle, const LlmConfig& cfg,
                             const LlmClient& client) {
  ChainResult out;
  std::vector<ChatMessage> conv{{"system", bundle.system}};
  auto ask = [&](std::string user) {
    conv.push_back({"user", std::move(user)});
    if (request_tokens(conv) + cfg.max_new_tokens > cfg.context_budget_tokens) {
      out.error = "request would exceed the context budget";
      return false;
    }
    const ChatResult r = client.complete(conv);
    out.attempts += r.attempts;
    if (!r.ok) {
      out.error = r.error;
      return false;
    }
    out.reply = r.content;
    return true;
  };
  if (!cfg.multi_turn) {
    out.ok = ask(bundle.single_turn(chunk));
    return out;
  }
  const std::array<std::string, 4> turns = {bundle.first_turn(chunk), bundle.prompts[1], bundle.prompts[2],
                                            bundle.final_turn()};
  const auto reply_cap = static_cast<std::size_t>(cfg.max_new_tokens) * 4;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (!ask(turns[i])) return out;
    if (i + 1 < turns.size()) conv.push_back({"assistant", std::string(utf8_prefix(out.reply, reply_cap))});
  }
  out.ok = true;
  return out;
}

ConvoSnapshot parse_snapshot(std::string_view reply) {
  const auto list = find_object_list(reply);
  auto fail = [&] { return Error("unparseable snapshot: " + std::string(reply), "characterize"); };
  if (!list) throw fail();
  ConvoSnapshot snap;
  snap.raw_reply = std::string(reply);
  std::set<std::string> seen;
  for (const auto& el : *list) {
    if (!el.is_object()) continue;
    const json* ent = find_key(el, {"entity", "entities", "name"});
    if (!ent) continue;
    SnapshotEntry e;
    e.entity = scalar_text(*ent);
    if (e.entity.empty() || !seen.insert(casefold(e.entity)).second) continue;
    if (const json* act = find_key(el, {"promoted_actions", "promoted_action", "actions", "action"})) {
      if (act->is_array()) {
        std::vector<std::string> parts;
        for (const auto& a : *act) {
          if (auto t = scalar_text(a); !t.empty()) parts.push_back(std::move(t));
        }
        for (std::size_t i = 0; i < parts.size(); ++i) e.promoted_actions += (i ? "; " : "") + parts[i];
      } else {
        e.promoted_actions = scalar_text(*act);
      }
    }
    if (const json* emo = find_key(el, {"emotions", "emotion"})) {
      std::vector<json> values = emo->is_array() ? emo->get<std::vector<json>>() : std::vector<json>{*emo};
      for (const auto& v : values) {
        auto t = scalar_text(v);
        if (!t.empty() && std::find(e.emotions.begin(), e.emotions.end(), t) == e.emotions.end()) {
          e.emotions.push_back(std::move(t));
        }
      }
    }
    if (e.emotions.empty()) continue;
    snap.entries.push_back(std::move(e));
    if (snap.entries.size() == kMaxSnapshotEntries) break;
  }
  if (snap.entries.empty()) throw fail();
  return snap;
}

std::string render_snapshot(const ConvoSnapshot& snapshot) {
  auto q = [](const std::string& s) { return json(s).dump(-1, ' ', false, json::error_handler_t::replace); };
  std::string out = "output = [\n";
  for (std::size_t i = 0; i < snapshot.entries.size(); ++i) {
    const auto& e = snapshot.entries[i];
    out += "{\n\"entity\": " + q(e.entity) + ",\n\"promoted_actions\": " + q(e.promoted_actions) + ",\n\"emotions\": [";
    for (std::size_t k = 0; k < e.emotions.size(); ++k) out += (k ? ", " : "") + q(e.emotions[k]);
    out += "]\n}";
    out += i + 1 < snapshot.entries.size() ? ",\n" : "\n";
  }
  out += "]";
  return out;
}

void check_snapshot(const ConvoSnapshot& snapshot) {
  if (snapshot.entries.empty() || snapshot.entries.size() > kMaxSnapshotEntries) {
    throw Error("snapshot must hold 1 to 5 entries", "characterize");
  }
  std::set<std::string> seen;
  for (const auto& e : snapshot.entries) {
    if (e.entity.empty()) throw Error("snapshot entity is empty", "characterize");
    if (!seen.insert(casefold(e.entity)).second) throw Error("duplicate snapshot entity " + e.entity, "characterize");
    if (e.emotions.empty()) throw Error("snapshot entity " + e.entity + " has no emotion", "characterize");
  }
}

ConvoSnapshot merge_snapshots(const std::vector<ConvoSnapshot>& parts) {
  if (parts.empty()) throw Error("nothing to merge", "characterize");
  std::vector<const ConvoSnapshot*> unique;
  for (const auto& p : parts) {
    if (std::none_of(unique.begin(), unique.end(), [&](const ConvoSnapshot* u) { return u->same_entries(p); })) {
      unique.push_back(&p);
    }
  }
  struct Acc {
    SnapshotEntry entry;
    std::vector<std::string> actions;
    int parts = 0;
    std::size_t first_seen = 0;
  };
  std::vector<Acc> accs;
  std::map<std::string, std::size_t> by_name;
  for (const ConvoSnapshot* p : unique) {
    std::set<std::size_t> touched;
    for (const auto& e : p->entries) {
      const std::string key = casefold(e.entity);
      auto [it, fresh] = by_name.emplace(key, accs.size());
      if (fresh) {
        Acc a;
        a.entry.entity = e.entity;
        a.first_seen = accs.size();
        accs.push_back(std::move(a));
      }
      Acc& a = accs[it->second];
      if (touched.insert(it->second).second) ++a.parts;
      if (!e.promoted_actions.empty() &&
          std::find(a.actions.begin(), a.actions.end(), e.promoted_actions) == a.actions.end()) {
        a.actions.push_back(e.promoted_actions);
      }
      for (const auto& emo : e.emotions) {
        if (std::find(a.entry.emotions.begin(), a.entry.emotions.end(), emo) == a.entry.emotions.end()) {
          a.entry.emotions.push_back(emo);
        }
      }
    }
  }
  std::stable_sort(accs.begin(), accs.end(), [](const Acc& a, const Acc& b) {
    return a.parts != b.parts ? a.parts > b.parts : a.first_seen < b.first_seen;
  });
  ConvoSnapshot out;
  out.cluster_id = parts.front().cluster_id;
  for (std::size_t i = 0; i < unique.size(); ++i) out.raw_reply += (i ? "\n\n" : "") + unique[i]->raw_reply;
  for (auto& a : accs) {
    if (out.entries.size() == kMaxSnapshotEntries) break;
    for (std::size_t i = 0; i < a.actions.size(); ++i) a.entry.promoted_actions += (i ? "; " : "") + a.actions[i];
    out.entries.push_back(std::move(a.entry));
  }
  return out;
}

AgendaSummary parse_summary(std::string_view reply, const PromptBundle& bundle) {
  const std::string t = trim(reply);
  if (t.empty()) throw Error("empty agenda summary reply", "characterize");
  AgendaSummary s;
  const std::string folded = casefold(t);
  if (starts_with(folded, "no agenda")) {
    s.text = t;
    s.no_agenda = true;
    return s;
  }
  s.text = starts_with(folded, casefold(bundle.completion_stem)) ? t : bundle.completion_stem + " " + t;
  return s;
}

SummaryResult summarize_agenda(std::string_view chunk, const PromptBundle& bundle, const LlmConfig& cfg,
                               const LlmClient& client) {
  SummaryResult out;
  std::vector<ChatMessage> conv{{"system", bundle.system}, {"user", bundle.summary_turn(chunk)}};
  if (cfg.summary_prefill) conv.push_back({"assistant", bundle.completion_stem});
  const ChatResult r = client.complete(conv);
  if (!r.ok) {
    out.error = r.error;
    return out;
  }
  out.raw_reply = r.content;
  try {
    out.summary = parse_summary(r.content, bundle);
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

ClusterCharacterization characterize_cluster(int cluster_id, const std::vector<Chunk>& chunks,
                                             const PromptBundle& bundle, const LlmConfig& cfg,
                                             const LlmClient& client) {
  ClusterCharacterization out;
  out.cluster_id = cluster_id;
  if (chunks.empty()) {
    out.failures.push_back("cluster has no chunks");
    return out;
  }
  std::vector<ChainResult> results(chunks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < chunks.size(); i = next.fetch_add(1)) {
      results[i] = run_prompt_chain(chunks[i].text, bundle, cfg, client);
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.in_flight), chunks.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<ConvoSnapshot> parts;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    ChunkOutcome oc;
    oc.chunk_index = chunks[i].index;
    oc.raw_reply = results[i].reply;
    if (!results[i].ok) {
      oc.error = results[i].error;
    } else {
      try {
        auto snap = parse_snapshot(results[i].reply);
        snap.cluster_id = cluster_id;
        parts.push_back(std::move(snap));
        oc.ok = true;
      } catch (const Error& e) {
        oc.error = "unparseable snapshot";
      }
    }
    if (!oc.ok) out.failures.push_back("chunk " + std::to_string(oc.chunk_index) + ": " + oc.error);
    out.chunks.push_back(std::move(oc));
  }
  if (!parts.empty()) out.snapshot = merge_snapshots(parts);

  const SummaryResult sr = summarize_agenda(chunks.front().text, bundle, cfg, client);
  out.summary_raw = sr.raw_reply;
  if (sr.ok) {
    out.summary = sr.summary;
  } else {
    out.failures.push_back("summary: " + sr.error);
  }
  return out;
}

json to_json(const ConvoSnapshot& s) {
  json entries = json::array();
  for (const auto& e : s.entries) {
    entries.push_back({{"entity", e.entity}, {"promoted_actions", e.promoted_actions}, {"emotions", e.emotions}});
  }
  return {{"cluster_id", s.cluster_id}, {"entries", std::move(entries)}, {"raw_reply", s.raw_reply}};
}

ConvoSnapshot snapshot_from_json(const json& j) {
  ConvoSnapshot s;
  s.cluster_id = j.value("cluster_id", -1);
  s.raw_reply = j.value("raw_reply", std::string{});
  for (const auto& e : j.at("entries")) {
    s.entries.push_back({e.at("entity").get<std::string>(), e.at("promoted_actions").get<std::string>(),
                         e.at("emotions").get<std::vector<std::string>>()});
  }
  return s;
}

json to_json(const AgendaSummary& s) { return {{"text", s.text}, {"no_agenda", s.no_agenda}}; }

json to_json(const ClusterCharacterization& c) {
  json chunks = json::array();
  for (const auto& oc : c.chunks) {
    chunks.push_back({{"chunk_index", oc.chunk_index}, {"ok", oc.ok}, {"error", oc.error}, {"raw_reply", oc.raw_reply}});
  }
  return {{"cluster_id", c.cluster_id},
          {"snapshot", c.snapshot ? to_json(*c.snapshot) : json(nullptr)},
          {"summary", c.summary ? to_json(*c.summary) : json(nullptr)},
          {"summary_raw", c.summary_raw},
          {"chunks", std::move(chunks)},
          {"failures", c.failures}};
}

ClusterCharacterization characterization_from_json(const json& j) {
  ClusterCharacterization c;
  c.cluster_id = j.at("cluster_id");
  if (!j.at("snapshot").is_null()) c.snapshot = snapshot_from_json(j.at("snapshot"));
  if (!j.at("summary").is_null()) {
    c.summary = AgendaSummary{j["summary"].at("text").get<std::string>(), j["summary"].at("no_agenda").get<bool>()};
  }
  c.summary_raw = j.value("summary_raw", std::string{});
  for (const auto& oc : j.at("chunks")) {
    c.chunks.push_back({oc.at("chunk_index").get<int>(), oc.at("ok").get<bool>(), oc.value("raw_reply", std::string{}),
                        oc.value("error", std::string{})});
  }
  c.failures = j.at("failures").get<std::vector<std::string>>();
  return c;
}

}  // namespace convo
