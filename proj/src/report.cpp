#include "convo/report.hpp"

#include <fstream>
#include <sstream>

#include "convo/error.hpp"
#include "convo/text.hpp"

namespace convo {

namespace {

constexpr std::string_view kBuiltinLexicon = R"TSV(# emotion word<TAB>polarity (negative | positive | neutral); lookup is case-insensitive
anger	negative
angry	negative
fear	negative
afraid	negative
concern	negative
concerned	negative
worry	negative
worried	negative
distrust	negative
mistrust	negative
frustration	negative
frustrated	negative
outrage	negative
outraged	negative
indignation	negative
disgust	negative
contempt	negative
hostility	negative
hatred	negative
resentment	negative
sadness	negative
sad	negative
disappointment	negative
disappointed	negative
anxiety	negative
anxious	negative
criticism	negative
critical	negative
opposition	negative
skepticism	negative
sarcasm	negative
betrayal	negative
despair	negative
shame	negative
support	positive
supportive	positive
admiration	positive
hope	positive
hopeful	positive
pride	positive
proud	positive
enthusiasm	positive
enthusiastic	positive
joy	positive
happiness	positive
gratitude	positive
trust	positive
optimism	positive
optimistic	positive
love	positive
solidarity	positive
excitement	positive
determination	positive
patriotism	positive
respect	positive
relief	positive
empathy	positive
surprise	neutral
curiosity	neutral
urgency	neutral
indifference	neutral
neutral	neutral
)TSV";

}  // namespace

const char* polarity_name(Polarity p) {
  switch (p) {
    case Polarity::kNegative: return "negative";
    case Polarity::kPositive: return "positive";
    case Polarity::kNeutral: break;
  }
  return "neutral";
}

PolarityLexicon PolarityLexicon::builtin() { return parse(kBuiltinLexicon, "<builtin lexicon>"); }

PolarityLexicon PolarityLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read polarity lexicon " + path.string(), "report");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

PolarityLexicon PolarityLexicon::parse(std::string_view tsv, std::string_view source) {
  PolarityLexicon lex;
  std::istringstream in{std::string(tsv)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(std::string(source) + ":" + std::to_string(lineno) + ": expected word<TAB>polarity", "report");
    }
    const std::string word = trim(line.substr(0, tab));
    const std::string pol = casefold(trim(line.substr(tab + 1)));
    Polarity p;
    if (pol == "negative") {
      p = Polarity::kNegative;
    } else if (pol == "positive") {
      p = Polarity::kPositive;
    } else if (pol == "neutral") {
      p = Polarity::kNeutral;
    } else {
      throw Error(std::string(source) + ":" + std::to_string(lineno) + ": unknown polarity '" + pol + "'", "report");
    }
    lex.set(word, p);
  }
  return lex;
}

void PolarityLexicon::set(std::string_view word, Polarity p) { words_[casefold(trim(word))] = p; }

Polarity PolarityLexicon::lookup(std::string_view emotion) const {
  const std::string key = casefold(trim(emotion));
  if (const auto it = words_.find(key); it != words_.end()) return it->second;
  // Multi-word phrases ("deep concern") take the first word the lexicon knows.
  for (const auto& w : word_tokens(key)) {
    if (const auto it = words_.find(w); it != words_.end()) return it->second;
  }
  return Polarity::kNeutral;
}

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

std::string export_network(const InfluencerNetwork& net, std::string_view graph_name) {
  std::ostringstream out;
  out << "digraph " << dot_quote(graph_name) << " {\n";
  if (net.size() > 0) out << "  node [shape=circle];\n";
  for (std::size_t i = 0; i < net.size(); ++i) {
    const std::string label = InfluencerNetwork::label(static_cast<int>(i));
    out << "  " << label << " [label=" << dot_quote(label) << ", author=" << dot_quote(net.nodes[i].author_id);
    const auto self = i < net.self_loops.size() ? net.self_loops[i] : 0;
    if (self > 0) out << ", selfrt=\"true\", selfrt_weight=\"" << self << '"';
    out << "];\n";
  }
  for (const auto& [e, w] : net.edges) {
    out << "  " << InfluencerNetwork::label(e.first) << " -> " << InfluencerNetwork::label(e.second) << " [label=\"" << w
        << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

std::string export_snapshot(const ConvoSnapshot& snapshot, const PolarityLexicon& lexicon,
                            std::string_view center_label) {
  static constexpr const char* kColor[] = {"red", "blue", "grey"};
  const std::string center =
      center_label.empty() ? "cluster " + std::to_string(snapshot.cluster_id) : std::string(center_label);
  std::ostringstream out;
  out << "digraph snapshot {\n";
  out << "  center [label=" << dot_quote(center) << ", class=\"cluster\", shape=box];\n";
  for (std::size_t i = 0; i < snapshot.entries.size(); ++i) {
    const auto& e = snapshot.entries[i];
    const std::string eid = "e" + std::to_string(i + 1);
    out << "  " << eid << " [label=" << dot_quote(e.entity)
        << ", class=\"entity\", shape=ellipse, style=filled, fillcolor=\"grey80\"];\n";
    out << "  center -> " << eid << " [label=" << dot_quote(e.promoted_actions)
        << ", class=\"action\", color=\"grey50\", fontcolor=\"grey40\"];\n";
    for (std::size_t k = 0; k < e.emotions.size(); ++k) {
      const std::string mid = eid + "_m" + std::to_string(k + 1);
      const Polarity p = lexicon.lookup(e.emotions[k]);
      out << "  " << mid << " [label=" << dot_quote(e.emotions[k]) << ", class=\"emotion\", shape=plaintext];\n";
      out << "  " << eid << " -> " << mid << " [class=\"" << polarity_name(p) << "\", color=\""
          << kColor[static_cast<int>(p)] << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace convo
