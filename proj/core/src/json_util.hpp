#pragma once

// Shared helpers for the JSON-based text formats. Private to the core library.

#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "autoclean/errors.hpp"

namespace autoclean::detail {

using Json = nlohmann::json;

/// Finite doubles serialize as numbers; infinities as the strings "inf"/"-inf".
inline Json encode_real(double v) {
  if (std::isinf(v)) return v > 0 ? Json("inf") : Json("-inf");
  return Json(v);
}

inline double decode_real(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "inf") return std::numeric_limits<double>::infinity();
  }
  throw FormatError("expected a number or \"inf\"/\"-inf\", got " + j.dump());
}

inline Json parse_json(const std::string& text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

template <class T>
T get_field(const Json& obj, const char* key, const char* what) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw FormatError(std::string(what) + ": missing key '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw FormatError(std::string(what) + ": bad value for '" + key + "': " + e.what());
  }
}

}  // namespace autoclean::detail
