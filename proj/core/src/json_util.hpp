#pragma once

#include <json.hpp>

#include <cmath>
#include <optional>
#include <string>

#include "citeforge/corpus.hpp"
#include "citeforge/error.hpp"

namespace citeforge::detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json passage_to_json(const Passage& p) {
  ordered_json j;
  j["id"] = p.id;
  j["title"] = p.title;
  j["text"] = p.body;
  return j;
}

inline ordered_json passages_to_json(const std::vector<Passage>& ps) {
  ordered_json arr = ordered_json::array();
  for (const auto& p : ps) arr.push_back(passage_to_json(p));
  return arr;
}

/// Fetches a required string field or throws MalformedRecord.
template <typename Json>
std::string require_string(const Json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorCode::MalformedRecord,
                "line " + std::to_string(line) + ": field '" + key + "' must be a string", line);
  }
  return it->template get<std::string>();
}

template <typename Json>
double require_number(const Json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw Error(ErrorCode::MalformedRecord,
                "line " + std::to_string(line) + ": field '" + key + "' must be a number", line);
  }
  return it->template get<double>();
}

inline nlohmann::json parse_json_line(std::string_view text, std::size_t line) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedRecord,
                "line " + std::to_string(line) + ": invalid JSON: " + e.what(), line);
  }
}

}  // namespace citeforge::detail
