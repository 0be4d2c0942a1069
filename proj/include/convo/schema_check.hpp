#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace convo {

/// Validates `doc` against a JSON Schema subset: type (single or list), enum,
/// const, properties, required, additionalProperties (bool or schema), items,
/// minItems, maxItems, minLength, minimum, maximum, anyOf and local $ref
/// ("#/$defs/..." or "#/definitions/..."). Returns one message per violation,
/// each prefixed by a JSON pointer; empty means valid.
std::vector<std::string> validate_schema(const nlohmann::json& schema, const nlohmann::json& doc);

/// The shipped run-report schema.
nlohmann::json load_report_schema(const std::filesystem::path& path = {});

}  // namespace convo
