#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "emx/error.hpp"
#include "emx/record.hpp"

namespace emx {

using json = nlohmann::json;

inline json to_json(const AttributeValue& v) {
  if (v.is_text()) return v.as_text();
  if (v.is_number()) return v.as_number();
  return nullptr;
}

inline AttributeValue value_from_json(const json& j) {
  if (j.is_null()) return AttributeValue::null();
  if (j.is_string()) return AttributeValue::text(j.get<std::string>());
  if (j.is_number()) return AttributeValue::number(j.get<double>());
  throw ValidationError("attribute value must be string, number or null");
}

inline json to_json(const Record& r) {
  json attrs = json::array();
  for (const auto& a : r.attributes()) {
    attrs.push_back({{"name", a.name}, {"value", to_json(a.value)}});
  }
  return {{"attributes", std::move(attrs)}};
}

inline Record record_from_json(const json& j) {
  if (!j.is_object() || !j.contains("attributes") || !j["attributes"].is_array()) {
    throw ValidationError("record JSON must be {\"attributes\": [...]}");
  }
  std::vector<Attribute> attrs;
  for (const auto& a : j["attributes"]) {
    if (!a.contains("name") || !a["name"].is_string()) {
      throw ValidationError("attribute JSON requires a string 'name'");
    }
    attrs.push_back({a["name"].get<std::string>(),
                     value_from_json(a.contains("value") ? a["value"] : json(nullptr))});
  }
  return Record(std::move(attrs));
}

inline json to_json(const RecordPair& p) {
  return {{"pair_id", p.pair_id}, {"a", to_json(p.a)}, {"b", to_json(p.b)}};
}

inline RecordPair pair_from_json(const json& j) {
  if (!j.is_object() || !j.contains("a") || !j.contains("b")) {
    throw ValidationError("record pair JSON requires 'a' and 'b'");
  }
  RecordPair p{record_from_json(j["a"]), record_from_json(j["b"]),
               j.value("pair_id", std::string())};
  return p;
}

}  // namespace emx
