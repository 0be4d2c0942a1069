#pragma once

#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

namespace convo {

/// Parses JSON-like text as produced by chat models: single or double (and
/// curly) quotes, unquoted barewords, trailing commas and `...` placeholder
/// elements. Returns nullopt when `text` does not start with a value.
/// `consumed` receives the number of bytes read.
std::optional<nlohmann::json> parse_lenient(std::string_view text, std::size_t* consumed = nullptr);

/// The first bracketed list in `text` that parses and holds at least one object.
std::optional<nlohmann::json> find_object_list(std::string_view text);

}  // namespace convo
