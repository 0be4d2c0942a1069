#include "convo/text.hpp"

#include <algorithm>
#include <numeric>

namespace convo {

namespace utf8 {

std::vector<char32_t> decode(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      extra = 3;
    } else {
      ++i;  // stray continuation or invalid lead byte
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= s.size()) {
        ok = false;
        break;
      }
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append(out, cp);
  return out;
}

}  // namespace utf8

namespace {

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
         cp == 0x00A0 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

bool is_ascii_alnum(char32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
}

// Non-ASCII letters and combining marks of the common scripts. Symbols,
// punctuation blocks and emoji are excluded.
bool is_nonascii_letter(char32_t cp) {
  if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp <= 0x24F) return true;                    // Latin-1 letters, Latin Extended
  if (cp >= 0x250 && cp <= 0x2AF) return true;     // IPA
  if (cp >= 0x300 && cp <= 0x36F) return true;     // combining diacritics
  if (cp >= 0x370 && cp <= 0x52F) return cp != 0x37E && cp != 0x387;  // Greek, Cyrillic
  if (cp >= 0x530 && cp <= 0x1FFF) return true;    // Armenian .. Greek Extended
  if (cp >= 0x3040 && cp <= 0x9FFF) return true;   // kana, CJK
  if (cp >= 0xAC00 && cp <= 0xD7AF) return true;   // Hangul
  return false;
}

bool is_word_char(char32_t cp) { return is_ascii_alnum(cp) || cp == '_' || is_nonascii_letter(cp); }

bool is_alnum(char32_t cp) { return is_ascii_alnum(cp) || is_nonascii_letter(cp); }

char32_t fold(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp < 0xC0) return cp;
  if (cp <= 0xDE) return cp == 0xD7 ? cp : cp + 0x20;
  if ((cp >= 0x100 && cp <= 0x137) || (cp >= 0x14A && cp <= 0x177)) return (cp % 2 == 0) ? cp + 1 : cp;
  if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E)) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

bool starts_with_ci(const std::u32string& s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (fold(s[i]) != static_cast<char32_t>(prefix[i])) return false;
  }
  return true;
}

bool is_hyperlink(const std::u32string& tok) {
  for (std::size_t i = 0; i + 2 < tok.size(); ++i) {
    if (tok[i] == ':' && tok[i + 1] == '/' && tok[i + 2] == '/') return true;
  }
  if (starts_with_ci(tok, "www.")) return true;
  // bare domain-path run: label(.label)+/...
  std::size_t i = 0;
  int labels = 0;
  while (i < tok.size()) {
    const std::size_t start = i;
    while (i < tok.size() && (is_ascii_alnum(tok[i]) || tok[i] == '-')) ++i;
    if (i == start) return false;
    ++labels;
    if (i == tok.size()) return false;
    if (tok[i] == '.') {
      ++i;
      continue;
    }
    return tok[i] == '/' && labels >= 2;
  }
  return false;
}

}  // namespace

bool is_emoji_codepoint(char32_t cp) {
  return (cp >= 0x1F600 && cp <= 0x1F64F)     // Emoticons
         || (cp >= 0x1F300 && cp <= 0x1F5FF)  // Misc Symbols and Pictographs
         || (cp >= 0x1F680 && cp <= 0x1F6FF)  // Transport and Map
         || (cp >= 0x1F900 && cp <= 0x1F9FF)  // Supplemental Symbols and Pictographs
         || (cp >= 0x1F1E6 && cp <= 0x1F1FF)  // regional indicators (flags)
         || (cp >= 0xFE00 && cp <= 0xFE0F)    // variation selectors
         || cp == 0x200D                      // zero width joiner inside emoji sequences
         || (cp >= 0xE0020 && cp <= 0xE007F); // tag sequences (subdivision flags)
}

std::string casefold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : utf8::decode(s)) utf8::append(out, fold(cp));
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(first, last - first + 1));
}

std::string canonical_tag(std::string_view tag) {
  std::string t = trim(tag);
  while (!t.empty() && t.front() == '#') t.erase(t.begin());
  return casefold(t);
}

namespace {

// Splits `tok` into hashtag matches (#\w+) and the residual text around them.
void split_hashtags(const std::u32string& tok, std::vector<std::string>& tags, std::u32string& residual) {
  std::size_t i = 0;
  while (i < tok.size()) {
    if (tok[i] == '#' && i + 1 < tok.size() && is_word_char(tok[i + 1])) {
      std::size_t j = i + 1;
      std::string tag;
      while (j < tok.size() && is_word_char(tok[j])) {
        utf8::append(tag, fold(tok[j]));
        ++j;
      }
      tags.push_back(std::move(tag));
      i = j;
    } else {
      residual.push_back(tok[i]);
      ++i;
    }
  }
}

void push_unique(std::vector<std::string>& dst, std::string tag) {
  if (tag.empty()) return;
  if (std::find(dst.begin(), dst.end(), tag) == dst.end()) dst.push_back(std::move(tag));
}

std::vector<std::u32string> whitespace_tokens(std::string_view raw) {
  std::vector<std::u32string> tokens;
  std::u32string cur;
  for (char32_t cp : utf8::decode(raw)) {
    if (is_emoji_codepoint(cp) || is_space(cp)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(cp);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

}  // namespace

NormalizedText normalize_text(std::string_view raw) {
  NormalizedText out;
  std::string clean;
  for (const auto& tok : whitespace_tokens(raw)) {
    if (is_hyperlink(tok)) continue;
    std::vector<std::string> tags;
    std::u32string residual;
    split_hashtags(tok, tags, residual);
    const bool had_tag = !tags.empty();
    for (auto& t : tags) push_unique(out.hashtags, std::move(t));
    const bool has_alnum = std::any_of(residual.begin(), residual.end(), is_alnum);
    if (residual.empty() || (had_tag && !has_alnum)) continue;
    if (!clean.empty()) clean.push_back(' ');
    for (char32_t cp : residual) utf8::append(clean, cp);
    if (residual.front() != '@' && has_alnum) ++out.token_count;
  }
  out.clean = std::move(clean);
  return out;
}

std::vector<std::string> extract_hashtags(std::string_view raw) {
  std::vector<std::string> out;
  for (const auto& tok : whitespace_tokens(raw)) {
    if (is_hyperlink(tok)) continue;
    std::vector<std::string> tags;
    std::u32string residual;
    split_hashtags(tok, tags, residual);
    for (auto& t : tags) push_unique(out, std::move(t));
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view clean) {
  std::vector<std::string> out;
  std::string cur;
  for (char32_t cp : utf8::decode(clean)) {
    if (is_alnum(cp)) {
      utf8::append(cur, fold(cp));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
  return out;
}

}  // namespace convo
