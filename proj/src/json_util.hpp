#pragma once

#include <string>

#include <json.hpp>

#include "stgen/error.hpp"

namespace stgen::detail {

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
T optional_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? required<T>(j, key) : fallback;
}

}  // namespace stgen::detail
