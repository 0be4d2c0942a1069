#include "convo/synthkit.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "convo/error.hpp"

namespace convo {

using nlohmann::json;

namespace {

struct Theme {
  std::array<const char*, 5> hashtags;
  std::array<const char*, 6> phrases;
  std::array<const char*, 6> extras;
};

// Three themed communities; further communities get generated vocabulary.
const std::array<Theme, 3> kThemes = {{
    {{"frexit", "souverainete", "asselineau2022", "upr", "quitterlue"},
     {"leave the european union before it is too late", "restore national sovereignty over our laws",
      "vote asselineau in april for real independence", "the brussels treaties must be repealed",
      "our currency and borders belong to the people", "exit the union and take back control"},
     {"brussels", "sovereignty", "treaty", "referendum", "independence", "borders"}},
    {{"passvaccinal", "lespatriotes", "philippot", "liberte", "nonaupass"},
     {"say no to the vaccine pass every saturday", "philippot leads the march for freedom in paris",
      "the health pass divides families and friends", "join the patriots against sanitary control",
      "freedom of choice is not negotiable for anyone", "the government must withdraw the pass now"},
     {"freedom", "march", "protest", "saturday", "patriots", "mandate"}},
    {{"climat", "transition", "ecologie", "energie", "biodiversite"},
     {"the climate plan needs real public funding", "solar farms create jobs in rural regions",
      "protect the rivers forests and wetlands now", "rail transport is the fastest green transition",
      "energy renovation lowers every household bill", "biodiversity loss threatens our farmers"},
     {"climate", "solar", "rail", "forests", "renovation", "farmers"}},
}};

const std::array<const char*, 6> kNoisePhrases = {
    "just had a great coffee with old friends", "looking forward to the weekend match tonight",
    "new recipe turned out better than expected", "the train was late again this morning",
    "reading a wonderful novel about the sea", "happy birthday to my little brother today"};

std::string community_hashtag(int c, int j) {
  if (c < static_cast<int>(kThemes.size()) && j < 5) return kThemes[static_cast<std::size_t>(c)].hashtags[static_cast<std::size_t>(j)];
  return "topic" + std::to_string(c) + "tag" + std::to_string(j);
}

std::string community_phrase(int c, SplitRng& rng) {
  if (c < static_cast<int>(kThemes.size())) {
    const auto& t = kThemes[static_cast<std::size_t>(c)];
    return std::string(t.phrases[rng.index(t.phrases.size())]) + " " + t.extras[rng.index(t.extras.size())];
  }
  std::string out;
  for (int k = 0; k < 5; ++k) {
    out += (k ? " " : "") + std::string("topic") + std::to_string(c) + "word" + std::to_string(rng.index(12));
  }
  return out;
}

std::string pad_id(char prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%07zu", prefix, n);
  return buf;
}

}  // namespace

void PlantSpec::validate() const {
  auto nonneg = [](int v, const char* what) {
    if (v < 0) throw Error(std::string(what) + " must be >= 0", "synth");
  };
  auto rate = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string(what) + " must lie in [0, 1]", "synth");
  };
  nonneg(communities, "communities");
  nonneg(hashtags_per_community, "hashtags_per_community");
  nonneg(messages_per_community, "messages_per_community");
  nonneg(noise_messages, "noise_messages");
  nonneg(operation.clique_size, "clique_size");
  nonneg(operation.clique_messages, "clique_messages");
  nonneg(operation.organic_authors, "organic_authors");
  rate(operation.mutual_rate, "mutual_rate");
  rate(operation.self_rate, "self_rate");
  rate(operation.organic_rate, "organic_rate");
  if (posters_per_community < 1) throw Error("posters_per_community must be >= 1", "synth");
  if (noise_messages > 0 && noise_hashtags < 1) throw Error("noise messages need noise_hashtags >= 1", "synth");
  if (communities > 0 && messages_per_community > 0 && hashtags_per_community < 1) {
    throw Error("community messages need hashtags_per_community >= 1", "synth");
  }
  if (operation.clique_size > 0 && (operation.clique_community < 0 || operation.clique_community >= communities)) {
    throw Error("clique_community must name an existing community", "synth");
  }
}

PlantSpec PlantSpec::from_json(const json& j) {
  PlantSpec s;
  s.communities = j.value("communities", s.communities);
  s.hashtags_per_community = j.value("hashtags_per_community", s.hashtags_per_community);
  s.messages_per_community = j.value("messages_per_community", s.messages_per_community);
  s.posters_per_community = j.value("posters_per_community", s.posters_per_community);
  s.noise_messages = j.value("noise_messages", s.noise_messages);
  s.noise_hashtags = j.value("noise_hashtags", s.noise_hashtags);
  s.seed = j.value("seed", s.seed);
  s.start_time = j.value("start_time", s.start_time);
  if (j.contains("operation")) {
    const auto& o = j["operation"];
    auto& op = s.operation;
    op.clique_size = o.value("clique_size", op.clique_size);
    op.mutual_rate = o.value("mutual_rate", op.mutual_rate);
    op.self_rate = o.value("self_rate", op.self_rate);
    op.clique_messages = o.value("clique_messages", op.clique_messages);
    op.clique_community = o.value("clique_community", op.clique_community);
    op.organic_authors = o.value("organic_authors", op.organic_authors);
    op.organic_rate = o.value("organic_rate", op.organic_rate);
  }
  s.validate();
  return s;
}

json PlantSpec::to_json() const {
  return {{"communities", communities},
          {"hashtags_per_community", hashtags_per_community},
          {"messages_per_community", messages_per_community},
          {"posters_per_community", posters_per_community},
          {"noise_messages", noise_messages},
          {"noise_hashtags", noise_hashtags},
          {"seed", seed},
          {"start_time", start_time},
          {"operation",
           {{"clique_size", operation.clique_size},
            {"mutual_rate", operation.mutual_rate},
            {"self_rate", operation.self_rate},
            {"clique_messages", operation.clique_messages},
            {"clique_community", operation.clique_community},
            {"organic_authors", operation.organic_authors},
            {"organic_rate", operation.organic_rate}}}};
}

json SynthTruth::to_json() const {
  return {{"hashtag_community", hashtag_community},
          {"message_community", message_community},
          {"clique_authors", clique_authors},
          {"organic_authors", organic_authors}};
}

SynthTruth SynthTruth::from_json(const json& j) {
  SynthTruth t;
  t.hashtag_community = j.at("hashtag_community").get<std::map<std::string, int>>();
  t.message_community = j.at("message_community").get<std::map<std::string, int>>();
  t.clique_authors = j.at("clique_authors").get<std::vector<std::string>>();
  t.organic_authors = j.at("organic_authors").get<std::vector<std::string>>();
  return t;
}

SynthCorpus synth_corpus(const PlantSpec& spec) {
  spec.validate();
  SplitRng rng(spec.seed);
  SynthCorpus out;
  auto& truth = out.truth;
  std::vector<std::vector<std::string>> tags(static_cast<std::size_t>(spec.communities));
  for (int c = 0; c < spec.communities; ++c) {
    for (int j = 0; j < spec.hashtags_per_community; ++j) {
      tags[static_cast<std::size_t>(c)].push_back(community_hashtag(c, j));
      truth.hashtag_community[tags[static_cast<std::size_t>(c)].back()] = c;
    }
  }

  struct Original {
    std::string id;
    std::string author;
    int community;
  };
  std::vector<Original> originals;
  std::ostringstream lines;
  std::int64_t clock = spec.start_time;
  std::size_t serial = 0;
  auto emit = [&](const std::string& id, const std::string& author, const std::string& text,
                  const std::string* retweet_of) {
    json rec{{"id", id}, {"author_id", author}, {"text", text}, {"timestamp", clock}};
    if (retweet_of) rec["retweet_of"] = *retweet_of;
    lines << rec.dump() << '\n';
    clock += 37;
  };
  auto post = [&](const std::string& author, int community) {
    const auto& pool = tags[static_cast<std::size_t>(community)];
    std::vector<std::string> chosen;
    const std::size_t want = std::min<std::size_t>(pool.size(), 2 + rng.index(2));
    while (chosen.size() < want) {
      const std::string& t = pool[rng.index(pool.size())];
      if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) chosen.push_back(t);
    }
    std::string text = community_phrase(community, rng);
    for (const auto& t : chosen) text += " #" + t;
    const std::string id = pad_id('m', serial++);
    emit(id, author, text, nullptr);
    originals.push_back({id, author, community});
    truth.message_community[id] = community;
  };

  for (int c = 0; c < spec.communities; ++c) {
    for (int m = 0; m < spec.messages_per_community; ++m) {
      post("c" + std::to_string(c) + "u" + std::to_string(m % spec.posters_per_community), c);
    }
  }
  const auto& op = spec.operation;
  for (int i = 0; i < op.clique_size; ++i) truth.clique_authors.push_back("op" + std::to_string(i));
  const std::size_t clique_begin = originals.size();
  for (int m = 0; m < op.clique_messages; ++m) {
    for (const auto& a : truth.clique_authors) post(a, op.clique_community);
  }
  const std::size_t clique_end = originals.size();
  for (int k = 0; k < spec.noise_messages; ++k) {
    const std::string tag = "misc" + std::to_string(rng.index(static_cast<std::size_t>(spec.noise_hashtags)));
    truth.hashtag_community[tag] = -1;
    const std::string id = pad_id('m', serial++);
    emit(id, "v" + std::to_string(k % 50), std::string(kNoisePhrases[rng.index(kNoisePhrases.size())]) + " #" + tag,
         nullptr);
    truth.message_community[id] = -1;
  }

  std::size_t rt_serial = 0;
  auto retweet = [&](const Original& o, const std::string& by) {
    emit(pad_id('r', rt_serial++), by, "RT @" + o.author + ": planted", &o.id);
  };
  for (std::size_t i = clique_begin; i < clique_end; ++i) {
    const auto& o = originals[i];
    for (const auto& b : truth.clique_authors) {
      if (b != o.author && rng.chance(op.mutual_rate)) retweet(o, b);
    }
    if (rng.chance(op.self_rate)) retweet(o, o.author);
  }
  for (int a = 0; a < op.organic_authors; ++a) {
    const std::string who = "aud" + std::to_string(a);
    truth.organic_authors.push_back(who);
    for (const auto& o : originals) {
      if (rng.chance(op.organic_rate)) retweet(o, who);
    }
  }

  out.jsonl = lines.str();
  std::istringstream in(out.jsonl);
  out.corpus = filter_messages(resolve_retweets(parse_corpus(in, SchemaMap{}, "<synth>")));
  check_corpus_invariants(out.corpus);
  return out;
}

void write_synth(const SynthCorpus& synth, const std::filesystem::path& jsonl_path) {
  if (jsonl_path.has_parent_path()) std::filesystem::create_directories(jsonl_path.parent_path());
  {
    std::ofstream out(jsonl_path, std::ios::binary);
    if (!out) throw Error("cannot write " + jsonl_path.string(), "synth");
    out << synth.jsonl;
  }
  std::filesystem::path truth = jsonl_path;
  truth.replace_extension(".truth.json");
  std::ofstream out(truth, std::ios::binary);
  if (!out) throw Error("cannot write " + truth.string(), "synth");
  out << synth.truth.to_json().dump(2) << '\n';
}

}  // namespace convo
