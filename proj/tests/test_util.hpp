#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "convo/corpus.hpp"

namespace convo::testing {

struct Rec {
  std::string id;
  std::string author;
  std::string text;
  std::optional<std::string> retweet_of;
  std::int64_t ts = 0;
};

inline std::string jsonl(const std::vector<Rec>& recs) {
  std::string out;
  for (const auto& r : recs) {
    nlohmann::json j{{"id", r.id}, {"author_id", r.author}, {"text", r.text}, {"timestamp", r.ts}};
    if (r.retweet_of) j["retweet_of"] = *r.retweet_of;
    out += j.dump() + "\n";
  }
  return out;
}

inline Corpus parse(const std::string& lines) {
  std::istringstream in(lines);
  return parse_corpus(in, SchemaMap{}, "<test>");
}

/// Parse, resolve and filter.
inline Corpus ingest(const std::vector<Rec>& recs) {
  return filter_messages(resolve_retweets(parse(jsonl(recs))));
}

/// Recursive-descent checker for the DOT language grammar (graph, digraph,
/// strict, subgraphs, node/edge/attribute statements, ID = ID). Returns an
/// empty string when `text` is one well-formed graph, else the first problem.
class DotChecker {
 public:
  explicit DotChecker(std::string_view text) : s_(text) {}

  std::string check() {
    try {
      tokenize();
      graph();
      if (peek().kind != Tok::kEnd) fail("trailing tokens after graph");
    } catch (const std::string& e) {
      return e;
    }
    return {};
  }

 private:
  enum class Tok { kId, kPunct, kEdgeOp, kEnd };
  struct Token {
    Tok kind;
    std::string text;
  };

  [[noreturn]] void fail(const std::string& what) { throw std::string("dot: " + what + " near token " + std::to_string(pos_)); }

  void tokenize() {
    std::size_t i = 0;
    while (i < s_.size()) {
      const char c = s_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == '/' && i + 1 < s_.size() && s_[i + 1] == '/') {
        while (i < s_.size() && s_[i] != '\n') ++i;
      } else if (c == '/' && i + 1 < s_.size() && s_[i + 1] == '*') {
        const auto end = s_.find("*/", i + 2);
        if (end == std::string_view::npos) fail("unterminated comment");
        i = end + 2;
      } else if (c == '#' && (i == 0 || s_[i - 1] == '\n')) {
        while (i < s_.size() && s_[i] != '\n') ++i;
      } else if (c == '"') {
        std::string v;
        ++i;
        bool closed = false;
        while (i < s_.size()) {
          if (s_[i] == '\\' && i + 1 < s_.size()) {
            v += s_[i];
            v += s_[i + 1];
            i += 2;
          } else if (s_[i] == '"') {
            ++i;
            closed = true;
            break;
          } else {
            v += s_[i++];
          }
        }
        if (!closed) fail("unterminated string");
        toks_.push_back({Tok::kId, v});
      } else if (c == '-' && i + 1 < s_.size() && (s_[i + 1] == '>' || s_[i + 1] == '-')) {
        toks_.push_back({Tok::kEdgeOp, std::string(s_.substr(i, 2))});
        i += 2;
      } else if (std::string_view("{}[];=,:").find(c) != std::string_view::npos) {
        toks_.push_back({Tok::kPunct, std::string(1, c)});
        ++i;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-') {
        std::string v(1, c);
        ++i;
        while (i < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i])) || s_[i] == '.')) v += s_[i++];
        toks_.push_back({Tok::kId, v});
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || static_cast<unsigned char>(c) >= 0x80) {
        std::string v;
        while (i < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i])) || s_[i] == '_' ||
                                 static_cast<unsigned char>(s_[i]) >= 0x80)) {
          v += s_[i++];
        }
        toks_.push_back({Tok::kId, v});
      } else {
        fail(std::string("unexpected character '") + c + "'");
      }
    }
  }

  const Token& peek(std::size_t ahead = 0) const {
    static const Token end{Tok::kEnd, ""};
    return pos_ + ahead < toks_.size() ? toks_[pos_ + ahead] : end;
  }
  bool is_punct(const char* p, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::kPunct && peek(ahead).text == p;
  }
  static bool keyword(const Token& t, std::string_view kw) {
    if (t.kind != Tok::kId || t.text.size() != kw.size()) return false;
    for (std::size_t i = 0; i < kw.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(t.text[i])) != kw[i]) return false;
    }
    return true;
  }
  void expect_punct(const char* p) {
    if (!is_punct(p)) fail(std::string("expected '") + p + "'");
    ++pos_;
  }
  void id() {
    if (peek().kind != Tok::kId) fail("expected ID");
    ++pos_;
  }

  void graph() {
    if (keyword(peek(), "strict")) ++pos_;
    if (keyword(peek(), "digraph")) {
      directed_ = true;
    } else if (!keyword(peek(), "graph")) {
      fail("expected graph or digraph");
    }
    ++pos_;
    if (peek().kind == Tok::kId) ++pos_;
    expect_punct("{");
    stmt_list();
    expect_punct("}");
  }

  void stmt_list() {
    while (!is_punct("}") && peek().kind != Tok::kEnd) {
      stmt();
      if (is_punct(";")) ++pos_;
    }
  }

  void attr_list() {
    while (is_punct("[")) {
      ++pos_;
      while (!is_punct("]")) {
        id();
        if (is_punct("=")) {
          ++pos_;
          id();
        }
        if (is_punct(";") || is_punct(",")) ++pos_;
        if (peek().kind == Tok::kEnd) fail("unterminated attribute list");
      }
      ++pos_;
    }
  }

  void node_id() {
    id();
    if (is_punct(":")) {
      ++pos_;
      id();
      if (is_punct(":")) {
        ++pos_;
        id();
      }
    }
  }

  void subgraph() {
    if (keyword(peek(), "subgraph")) {
      ++pos_;
      if (peek().kind == Tok::kId) ++pos_;
    }
    expect_punct("{");
    stmt_list();
    expect_punct("}");
  }

  void edge_rhs() {
    while (peek().kind == Tok::kEdgeOp) {
      if ((peek().text == "->") != directed_) fail("edge operator does not match graph kind");
      ++pos_;
      if (keyword(peek(), "subgraph") || is_punct("{")) {
        subgraph();
      } else {
        node_id();
      }
    }
  }

  void stmt() {
    const Token& t = peek();
    if (keyword(t, "graph") || keyword(t, "node") || keyword(t, "edge")) {
      ++pos_;
      if (!is_punct("[")) fail("attribute statement needs '['");
      attr_list();
      return;
    }
    if (keyword(t, "subgraph") || is_punct("{")) {
      subgraph();
      edge_rhs();
      attr_list();
      return;
    }
    if (t.kind == Tok::kId && is_punct("=", 1)) {
      pos_ += 2;
      id();
      return;
    }
    node_id();
    edge_rhs();
    attr_list();
  }

  std::string_view s_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  bool directed_ = false;
};

inline std::string dot_problem(std::string_view text) { return DotChecker(text).check(); }

/// Adjusted Rand index between two labelings of the same items.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  std::vector<int> ua(a), ub(b);
  std::sort(ua.begin(), ua.end());
  ua.erase(std::unique(ua.begin(), ua.end()), ua.end());
  std::sort(ub.begin(), ub.end());
  ub.erase(std::unique(ub.begin(), ub.end()), ub.end());
  auto idx = [](const std::vector<int>& u, int v) {
    return static_cast<std::size_t>(std::lower_bound(u.begin(), u.end(), v) - u.begin());
  };
  std::vector<std::vector<double>> table(ua.size(), std::vector<double>(ub.size(), 0.0));
  for (std::size_t i = 0; i < n; ++i) table[idx(ua, a[i])][idx(ub, b[i])] += 1.0;
  auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  std::vector<double> col(ub.size(), 0.0);
  for (std::size_t i = 0; i < ua.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < ub.size(); ++j) {
      sum_ij += c2(table[i][j]);
      row += table[i][j];
      col[j] += table[i][j];
    }
    sum_a += c2(row);
  }
  for (double c : col) sum_b += c2(c);
  const double expected = sum_a * sum_b / c2(static_cast<double>(n));
  const double max_index = (sum_a + sum_b) / 2.0;
  if (max_index == expected) return 1.0;
  return (sum_ij - expected) / (max_index - expected);
}

}  // namespace convo::testing
