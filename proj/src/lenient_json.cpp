#include "convo/lenient_json.hpp"

#include <cstdlib>

#include "convo/text.hpp"

namespace convo {

using nlohmann::json;

namespace {

constexpr std::string_view kLeftDouble = "\xE2\x80\x9C";   // “
constexpr std::string_view kRightDouble = "\xE2\x80\x9D";  // ”
constexpr std::string_view kLeftSingle = "\xE2\x80\x98";   // ‘
constexpr std::string_view kRightSingle = "\xE2\x80\x99";  // ’
constexpr std::string_view kEllipsis = "\xE2\x80\xA6";     // …

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  std::optional<json> value() {
    ws();
    if (eof()) return std::nullopt;
    const char c = s_[i_];
    if (c == '{') return object();
    if (c == '[') return array();
    if (auto q = open_quote()) return quoted(*q);
    if (c == ',' || c == '}' || c == ']' || c == ':') return std::nullopt;
    return bareword();
  }

  std::size_t pos() const noexcept { return i_; }

 private:
  struct Quote {
    std::size_t open_len;
    std::string_view close;
  };

  bool eof() const noexcept { return i_ >= s_.size(); }
  bool at(std::string_view tok) const { return s_.substr(i_, tok.size()) == tok; }

  void ws() {
    while (!eof() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) ++i_;
  }

  std::optional<Quote> open_quote() const {
    if (eof()) return std::nullopt;
    if (s_[i_] == '"') return Quote{1, "\""};
    if (s_[i_] == '\'') return Quote{1, "'"};
    if (at(kLeftDouble)) return Quote{kLeftDouble.size(), kRightDouble};
    if (at(kLeftSingle)) return Quote{kLeftSingle.size(), kRightSingle};
    return std::nullopt;
  }

  // A closing quote only ends the string when a structural character follows.
  bool closes_here(std::size_t after) const {
    while (after < s_.size() && (s_[after] == ' ' || s_[after] == '\t' || s_[after] == '\n' || s_[after] == '\r')) {
      ++after;
    }
    if (after >= s_.size()) return true;
    const char c = s_[after];
    return c == ',' || c == '}' || c == ']' || c == ':';
  }

  std::optional<json> quoted(const Quote& q) {
    i_ += q.open_len;
    std::string out;
    while (!eof()) {
      const char c = s_[i_];
      if (c == '\\' && i_ + 1 < s_.size()) {
        const char e = s_[i_ + 1];
        i_ += 2;
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          case 'b': out.push_back('\b'); break;
          case 'f': out.push_back('\f'); break;
          case 'u': {
            if (i_ + 4 > s_.size()) return std::nullopt;
            char32_t cp = static_cast<char32_t>(std::strtoul(std::string(s_.substr(i_, 4)).c_str(), nullptr, 16));
            i_ += 4;
            if (cp >= 0xD800 && cp <= 0xDBFF && at("\\u") && i_ + 6 <= s_.size()) {
              const auto lo = static_cast<char32_t>(std::strtoul(std::string(s_.substr(i_ + 2, 4)).c_str(), nullptr, 16));
              if (lo >= 0xDC00 && lo <= 0xDFFF) {
                cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
                i_ += 6;
              }
            }
            utf8::append(out, cp);
            break;
          }
          default: out.push_back(e); break;
        }
        continue;
      }
      if (at(q.close) && closes_here(i_ + q.close.size())) {
        i_ += q.close.size();
        return json(out);
      }
      out.push_back(c);
      ++i_;
    }
    return std::nullopt;
  }

  json scalar_from_bareword(std::string word) {
    if (word == "true") return true;
    if (word == "false") return false;
    if (word == "null") return nullptr;
    return json(std::move(word));
  }

  std::optional<json> bareword() {
    const std::size_t start = i_;
    while (!eof() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' && s_[i_] != '\n' && s_[i_] != '\r') ++i_;
    std::string word = trim(s_.substr(start, i_ - start));
    if (word.empty()) return std::nullopt;
    return scalar_from_bareword(std::move(word));
  }

  std::optional<std::string> key() {
    ws();
    if (auto q = open_quote()) {
      auto k = quoted(*q);
      if (!k) return std::nullopt;
      return k->get<std::string>();
    }
    const std::size_t start = i_;
    while (!eof() && s_[i_] != ':' && s_[i_] != '}' && s_[i_] != '\n') ++i_;
    std::string k = trim(s_.substr(start, i_ - start));
    if (k.empty()) return std::nullopt;
    return k;
  }

  bool skip_placeholder() {
    ws();
    if (at("...")) {
      while (at(".")) ++i_;
      return true;
    }
    if (at(kEllipsis)) {
      i_ += kEllipsis.size();
      return true;
    }
    return false;
  }

  std::optional<json> object() {
    ++i_;
    json obj = json::object();
    while (true) {
      ws();
      if (eof()) return std::nullopt;
      if (s_[i_] == '}') {
        ++i_;
        return obj;
      }
      if (s_[i_] == ',') {
        ++i_;
        continue;
      }
      if (skip_placeholder()) continue;
      auto k = key();
      if (!k) return std::nullopt;
      ws();
      if (eof() || s_[i_] != ':') return std::nullopt;
      ++i_;
      auto v = value();
      if (!v) return std::nullopt;
      obj[*k] = std::move(*v);
    }
  }

  std::optional<json> array() {
    ++i_;
    json arr = json::array();
    while (true) {
      ws();
      if (eof()) return std::nullopt;
      if (s_[i_] == ']') {
        ++i_;
        return arr;
      }
      if (s_[i_] == ',') {
        ++i_;
        continue;
      }
      if (skip_placeholder()) continue;
      auto v = value();
      if (!v) return std::nullopt;
      arr.push_back(std::move(*v));
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

}  // namespace

std::optional<json> parse_lenient(std::string_view text, std::size_t* consumed) {
  Parser p(text);
  auto v = p.value();
  if (consumed) *consumed = p.pos();
  return v;
}

std::optional<json> find_object_list(std::string_view text) {
  for (std::size_t pos = text.find('['); pos != std::string_view::npos; pos = text.find('[', pos + 1)) {
    auto v = parse_lenient(text.substr(pos));
    if (!v || !v->is_array()) continue;
    for (const auto& el : *v) {
      if (el.is_object()) return v;
    }
  }
  return std::nullopt;
}

}  // namespace convo
