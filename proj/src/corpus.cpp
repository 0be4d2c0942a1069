#include "convo/corpus.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "convo/error.hpp"
#include "convo/text.hpp"

namespace convo {

using nlohmann::json;

const Message* Corpus::find(std::string_view id) const {
  if (index_.size() != messages.size()) reindex();
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &messages[it->second];
}

std::vector<const Message*> Corpus::originals() const {
  std::vector<const Message*> out;
  for (const auto& m : messages) {
    if (!m.is_retweet() && !m.filtered_out) out.push_back(&m);
  }
  return out;
}

void Corpus::reindex() const {
  index_.clear();
  index_.reserve(messages.size());
  for (std::size_t i = 0; i < messages.size(); ++i) index_.emplace(messages[i].id, i);
}

SchemaMap SchemaMap::french_election() {
  SchemaMap s;
  s.id = "id_str";
  s.author = "user.id_str";
  s.text = "full_text";
  s.timestamp = "created_at";
  s.retweet_of = "retweeted_status.id_str";
  s.hashtag_source = HashtagSource::kField;
  s.hashtag_field = "entities.hashtags";
  return s;
}

SchemaMap SchemaMap::from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "french_election") return french_election();
    if (j.get<std::string>() == "default") return SchemaMap{};
    throw Error("unknown schema preset '" + j.get<std::string>() + "'", "ingest");
  }
  SchemaMap s = j.contains("preset") ? from_json(j.at("preset")) : SchemaMap{};
  s.id = j.value("id", s.id);
  s.author = j.value("author", s.author);
  s.text = j.value("text", s.text);
  s.timestamp = j.value("timestamp", s.timestamp);
  s.retweet_of = j.value("retweet_of", s.retweet_of);
  if (j.contains("hashtags")) {
    const std::string mode = j.at("hashtags");
    if (mode == "regex") {
      s.hashtag_source = HashtagSource::kRegex;
    } else {
      s.hashtag_source = HashtagSource::kField;
      s.hashtag_field = mode;
    }
  }
  s.validate();
  return s;
}

json SchemaMap::to_json() const {
  return {{"id", id},
          {"author", author},
          {"text", text},
          {"timestamp", timestamp},
          {"retweet_of", retweet_of},
          {"hashtags", hashtag_source == HashtagSource::kRegex ? std::string("regex") : hashtag_field}};
}

void SchemaMap::validate() const {
  for (const auto* f : {&id, &author, &text, &timestamp, &retweet_of}) {
    if (f->empty()) throw Error("schema map has an empty field mapping", "ingest");
  }
  if (hashtag_source == HashtagSource::kField && hashtag_field.empty()) {
    throw Error("schema map hashtag field is empty", "ingest");
  }
}

namespace {

const json* lookup(const json& rec, std::string_view path) {
  const json* cur = &rec;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto dot = path.find('.', start);
    const auto key = std::string(path.substr(start, dot == std::string_view::npos ? path.npos : dot - start));
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return cur->is_null() ? nullptr : cur;
}

std::optional<std::string> as_id(const json* v) {
  if (v == nullptr) return std::nullopt;
  if (v->is_string()) {
    auto s = v->get<std::string>();
    if (s.empty()) return std::nullopt;
    return s;
  }
  if (v->is_number_integer()) return std::to_string(v->get<std::int64_t>());
  if (v->is_number_unsigned()) return std::to_string(v->get<std::uint64_t>());
  return std::nullopt;
}

std::optional<std::int64_t> parse_time_string(const std::string& s) {
  if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::stoll(s);
  }
  // Twitter "Wed Oct 10 20:19:24 +0000 2018", ISO-8601 "2022-01-01T12:00:00Z".
  for (const char* fmt : {"%a %b %d %H:%M:%S +0000 %Y", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"}) {
    std::tm tm{};
    std::istringstream in(s);
    in >> std::get_time(&tm, fmt);
    if (!in.fail()) return static_cast<std::int64_t>(timegm(&tm));
  }
  return std::nullopt;
}

std::optional<std::int64_t> as_time(const json* v) {
  if (v == nullptr) return std::nullopt;
  if (v->is_number_integer() || v->is_number_unsigned()) return v->get<std::int64_t>();
  if (v->is_number_float()) return static_cast<std::int64_t>(v->get<double>());
  if (v->is_string()) return parse_time_string(v->get<std::string>());
  return std::nullopt;
}

std::vector<std::string> hashtags_from_field(const json* v) {
  std::vector<std::string> out;
  if (v == nullptr || !v->is_array()) return out;
  for (const auto& h : *v) {
    std::string tag;
    if (h.is_string()) {
      tag = h.get<std::string>();
    } else if (h.is_object() && h.contains("text") && h["text"].is_string()) {
      tag = h["text"].get<std::string>();
    }
    tag = canonical_tag(tag);
    if (!tag.empty() && std::find(out.begin(), out.end(), tag) == out.end()) out.push_back(std::move(tag));
  }
  return out;
}

bool message_order(const Message& a, const Message& b) {
  if (a.timestamp.has_value() != b.timestamp.has_value()) return a.timestamp.has_value();
  if (a.timestamp && *a.timestamp != *b.timestamp) return *a.timestamp < *b.timestamp;
  return a.id < b.id;
}

}  // namespace

Corpus parse_corpus(std::istream& in, const SchemaMap& schema, std::string_view source_name) {
  schema.validate();
  Corpus corpus;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  auto skip = [&](const std::string& why) {
    ++corpus.stats.skipped;
    if (corpus.stats.skipped_samples.size() < 5) {
      corpus.stats.skipped_samples.push_back(std::string(source_name) + ":" + std::to_string(lineno) + ": " + why);
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    ++corpus.stats.raw;
    json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (rec.is_discarded() || !rec.is_object()) {
      skip("not a JSON object");
      continue;
    }
    auto id = as_id(lookup(rec, schema.id));
    auto author = as_id(lookup(rec, schema.author));
    const json* text = lookup(rec, schema.text);
    if (!id || !author || text == nullptr || !text->is_string()) {
      skip("missing id, author or text");
      continue;
    }
    if (!seen.insert(*id).second) {
      skip("duplicate id " + *id);
      continue;
    }
    Message m;
    m.id = std::move(*id);
    m.author_id = std::move(*author);
    m.raw_text = text->get<std::string>();
    m.timestamp = as_time(lookup(rec, schema.timestamp));
    m.retweet_of = as_id(lookup(rec, schema.retweet_of));
    if (m.retweet_of && *m.retweet_of == m.id) {
      seen.erase(m.id);
      skip("record retweets itself");
      continue;
    }
    auto norm = normalize_text(m.raw_text);
    m.clean_text = std::move(norm.clean);
    m.token_count = norm.token_count;
    m.hashtags = schema.hashtag_source == HashtagSource::kRegex
                     ? std::move(norm.hashtags)
                     : hashtags_from_field(lookup(rec, schema.hashtag_field));
    corpus.messages.push_back(std::move(m));
  }
  if (corpus.messages.empty()) {
    std::string msg = "no parseable records in " + std::string(source_name);
    for (const auto& s : corpus.stats.skipped_samples) msg += "\n  " + s;
    throw Error(msg, "ingest");
  }
  std::stable_sort(corpus.messages.begin(), corpus.messages.end(), message_order);
  corpus.reindex();
  for (const auto& m : corpus.messages) {
    if (m.is_retweet()) {
      ++corpus.stats.retweet_records;
    } else {
      ++corpus.stats.originals;
    }
  }
  return corpus;
}

Corpus parse_corpus(const std::filesystem::path& path, const SchemaMap& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read corpus file " + path.string(), "ingest");
  return parse_corpus(in, schema, path.string());
}

Corpus resolve_retweets(Corpus corpus) {
  corpus.reindex();
  for (auto& m : corpus.messages) {
    m.retweet_count = 0;
    m.root_id.reset();
  }
  corpus.retweets.clear();
  corpus.stats.dangling = 0;
  corpus.stats.cycles = 0;
  corpus.stats.resolved_retweets = 0;

  std::vector<std::size_t> root_of(corpus.messages.size(), std::string::npos);
  for (std::size_t i = 0; i < corpus.messages.size(); ++i) {
    const Message& m = corpus.messages[i];
    if (!m.is_retweet()) continue;
    std::unordered_set<std::string> visited{m.id};
    std::string target = *m.retweet_of;
    std::size_t root = std::string::npos;
    while (true) {
      const Message* t = corpus.find(target);
      if (t == nullptr) {
        ++corpus.stats.dangling;
        break;
      }
      if (!t->is_retweet()) {
        root = static_cast<std::size_t>(t - corpus.messages.data());
        break;
      }
      if (!visited.insert(t->id).second) {
        ++corpus.stats.dangling;
        ++corpus.stats.cycles;
        break;
      }
      target = *t->retweet_of;
    }
    root_of[i] = root;
  }
  if (corpus.stats.cycles > 0) {
    log::warn("retweet cycles broken: " + std::to_string(corpus.stats.cycles) + " records counted as dangling");
  }
  for (std::size_t i = 0; i < corpus.messages.size(); ++i) {
    if (root_of[i] == std::string::npos) continue;
    Message& rt = corpus.messages[i];
    Message& root = corpus.messages[root_of[i]];
    rt.root_id = root.id;
    ++root.retweet_count;
    ++corpus.stats.resolved_retweets;
    corpus.retweets.push_back({rt.id, rt.author_id, root.id, root.author_id});
  }
  return corpus;
}

Corpus filter_messages(Corpus corpus) {
  corpus.stats.retained = 0;
  for (auto& m : corpus.messages) {
    if (m.is_retweet()) {
      m.filtered_out = true;
      continue;
    }
    m.filtered_out = m.hashtags.empty() || m.token_count < 3;
    if (!m.filtered_out) ++corpus.stats.retained;
  }
  corpus.stats.dropped_filter = corpus.stats.originals - corpus.stats.retained;
  return corpus;
}

void check_corpus_invariants(const Corpus& corpus) {
  std::int64_t mass = 0;
  std::int64_t retweets = 0;
  std::int64_t originals = 0;
  for (const auto& m : corpus.messages) {
    for (const auto& h : m.hashtags) {
      if (h.empty() || casefold(h) != h) throw Error("message " + m.id + " has a non-canonical hashtag");
    }
    auto sorted = m.hashtags;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error("message " + m.id + " has duplicate hashtags");
    }
    if (m.retweet_of && *m.retweet_of == m.id) throw Error("message " + m.id + " retweets itself");
    if (m.retweet_count < 0) throw Error("negative retweet_count on " + m.id);
    if (m.is_retweet()) {
      ++retweets;
      if (m.retweet_count != 0) throw Error("retweet record " + m.id + " carries a retweet_count");
    } else {
      ++originals;
      mass += m.retweet_count;
    }
  }
  if (retweets != corpus.stats.retweet_records || originals != corpus.stats.originals) {
    throw Error("corpus stats disagree with message records");
  }
  if (mass != corpus.stats.resolved_retweets) throw Error("retweet mass differs from resolved retweet count");
  if (corpus.stats.resolved_retweets + corpus.stats.dangling != corpus.stats.retweet_records) {
    throw Error("retweet records are neither resolved nor dangling");
  }
}

json message_record(const Message& m) {
  json j{{"id", m.id}, {"author_id", m.author_id}, {"text", m.raw_text}};
  if (m.timestamp) j["timestamp"] = *m.timestamp;
  if (m.retweet_of) j["retweet_of"] = *m.retweet_of;
  return j;
}

json corpus_to_json(const Corpus& corpus) {
  json msgs = json::array();
  for (const auto& m : corpus.messages) {
    json j{{"id", m.id},
           {"author_id", m.author_id},
           {"raw_text", m.raw_text},
           {"clean_text", m.clean_text},
           {"hashtags", m.hashtags},
           {"token_count", m.token_count},
           {"retweet_count", m.retweet_count},
           {"filtered_out", m.filtered_out}};
    j["timestamp"] = m.timestamp ? json(*m.timestamp) : json(nullptr);
    j["retweet_of"] = m.retweet_of ? json(*m.retweet_of) : json(nullptr);
    j["root_id"] = m.root_id ? json(*m.root_id) : json(nullptr);
    msgs.push_back(std::move(j));
  }
  json links = json::array();
  for (const auto& r : corpus.retweets) {
    links.push_back({r.retweet_id, r.retweeter_id, r.root_id, r.root_author_id});
  }
  const auto& s = corpus.stats;
  return {{"messages", std::move(msgs)},
          {"retweets", std::move(links)},
          {"stats",
           {{"raw", s.raw},
            {"skipped", s.skipped},
            {"originals", s.originals},
            {"retweet_records", s.retweet_records},
            {"resolved_retweets", s.resolved_retweets},
            {"dangling", s.dangling},
            {"cycles", s.cycles},
            {"retained", s.retained},
            {"dropped_filter", s.dropped_filter},
            {"skipped_samples", s.skipped_samples}}}};
}

Corpus corpus_from_json(const json& j) {
  Corpus c;
  for (const auto& jm : j.at("messages")) {
    Message m;
    m.id = jm.at("id");
    m.author_id = jm.at("author_id");
    m.raw_text = jm.at("raw_text");
    m.clean_text = jm.at("clean_text");
    m.hashtags = jm.at("hashtags").get<std::vector<std::string>>();
    m.token_count = jm.at("token_count");
    m.retweet_count = jm.at("retweet_count");
    m.filtered_out = jm.at("filtered_out");
    if (!jm.at("timestamp").is_null()) m.timestamp = jm.at("timestamp").get<std::int64_t>();
    if (!jm.at("retweet_of").is_null()) m.retweet_of = jm.at("retweet_of").get<std::string>();
    if (!jm.at("root_id").is_null()) m.root_id = jm.at("root_id").get<std::string>();
    c.messages.push_back(std::move(m));
  }
  for (const auto& r : j.at("retweets")) {
    c.retweets.push_back({r.at(0), r.at(1), r.at(2), r.at(3)});
  }
  const auto& s = j.at("stats");
  c.stats.raw = s.at("raw");
  c.stats.skipped = s.at("skipped");
  c.stats.originals = s.at("originals");
  c.stats.retweet_records = s.at("retweet_records");
  c.stats.resolved_retweets = s.at("resolved_retweets");
  c.stats.dangling = s.at("dangling");
  c.stats.cycles = s.at("cycles");
  c.stats.retained = s.at("retained");
  c.stats.dropped_filter = s.at("dropped_filter");
  c.stats.skipped_samples = s.at("skipped_samples").get<std::vector<std::string>>();
  c.reindex();
  return c;
}

}  // namespace convo
