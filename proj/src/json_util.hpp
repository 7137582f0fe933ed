#pragma once

#include "dqm/types.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <utility>

namespace dqm::detail {

using Json = nlohmann::json;

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

/// Line of the first occurrence of "key" in the raw text, or 0.
inline std::size_t line_of_key(std::string_view text, std::string_view key) {
  const std::string quoted = "\"" + std::string(key) + "\"";
  const std::size_t at = text.find(quoted);
  return at == std::string_view::npos ? 0 : line_column(text, at).first;
}

inline Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw FormatError(std::string("malformed JSON: ") + e.what(), line, col);
  }
}

inline void check_schema(const Json& doc, std::string_view text, std::string_view kind) {
  if (!doc.is_object()) throw FormatError("expected a JSON object", 1, 1);
  if (!doc.contains("schema_version"))
    throw FormatError(std::string(kind) + ": missing schema_version", 1, 1);
  const Json& v = doc["schema_version"];
  if (!v.is_number_integer() || v.get<long>() != 1)
    throw FormatError(std::string(kind) + ": unsupported schema_version " + v.dump() +
                          " (expected 1)",
                      line_of_key(text, "schema_version"), 1);
}

/// doc[key] converted to T; FormatError naming the field (and its line) otherwise.
template <class T>
T field(const Json& doc, const char* key, std::string_view text) {
  if (!doc.is_object() || !doc.contains(key))
    throw FormatError(std::string("missing field '") + key + "'", line_of_key(text, key), 1);
  try {
    return doc.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw FormatError(std::string("invalid field '") + key + "': " + e.what(),
                      line_of_key(text, key), 1);
  }
}

}  // namespace dqm::detail
