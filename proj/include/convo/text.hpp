#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace convo {

/// Result of normalizing one raw message text.
struct NormalizedText {
  std::string clean;                  ///< hyperlinks, emoji and hashtags removed; whitespace collapsed
  std::vector<std::string> hashtags;  ///< lowercase, without '#', first-seen order, deduplicated
  int token_count = 0;                ///< textual tokens (no hashtags, no @-mentions, >=1 alnum)
};

/// Strip hyperlinks and emoji, pull out hashtags and count textual tokens.
/// Total: any byte string is accepted; invalid UTF-8 bytes are dropped.
NormalizedText normalize_text(std::string_view raw);

/// Hashtags found by scanning `#\w+` over `raw` (Unicode letters count as word chars).
std::vector<std::string> extract_hashtags(std::string_view raw);

/// Lowercase a hashtag or term and drop a leading '#'.
std::string canonical_tag(std::string_view tag);

/// Simple case folding: ASCII plus the Latin-1 / Latin Extended-A letters.
std::string casefold(std::string_view s);

/// Lowercased word tokens (alnum runs, apostrophes split) used by LDA and lexical embeddings.
std::vector<std::string> word_tokens(std::string_view clean);

std::string trim(std::string_view s);

/// Whether `cp` falls in one of the removed emoji ranges.
bool is_emoji_codepoint(char32_t cp);

/// 64-bit FNV-1a; pass a previous digest as `h` to chain.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 14695981039346656037ULL);

/// Lowercase 16-digit hex.
std::string hex64(std::uint64_t v);

/// Levenshtein distance over bytes.
std::size_t edit_distance(std::string_view a, std::string_view b);

namespace utf8 {

std::vector<char32_t> decode(std::string_view s);
void append(std::string& out, char32_t cp);
std::string encode(const std::vector<char32_t>& cps);

}  // namespace utf8

}  // namespace convo
