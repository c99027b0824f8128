#include "tconv/schema.hpp"

#include <cmath>

#include "tconv/schemas_embedded.hpp"

namespace tconv {

using nlohmann::json;

namespace {

bool has_type(const json& v, const std::string& type) {
  if (type == "null") return v.is_null();
  if (type == "boolean") return v.is_boolean();
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    return v.is_number_float() && std::floor(v.get<double>()) == v.get<double>();
  }
  return false;
}

void check(const json& v, const json& schema, const std::string& where, std::vector<std::string>& errors) {
  if (schema.is_boolean()) {
    if (!schema.get<bool>()) errors.push_back(where + ": not allowed");
    return;
  }
  if (auto it = schema.find("type"); it != schema.end()) {
    bool ok = false;
    if (it->is_string()) {
      ok = has_type(v, *it);
    } else {
      for (const auto& t : *it) ok = ok || has_type(v, t);
    }
    if (!ok) {
      errors.push_back(where + ": expected type " + it->dump());
      return;
    }
  }
  if (auto it = schema.find("enum"); it != schema.end()) {
    bool ok = false;
    for (const auto& e : *it) ok = ok || e == v;
    if (!ok) errors.push_back(where + ": value not in enum");
  }
  if (v.is_number()) {
    if (auto it = schema.find("minimum"); it != schema.end() && v.get<double>() < it->get<double>())
      errors.push_back(where + ": below minimum");
    if (auto it = schema.find("maximum"); it != schema.end() && v.get<double>() > it->get<double>())
      errors.push_back(where + ": above maximum");
  }
  if (v.is_object()) {
    if (auto it = schema.find("required"); it != schema.end())
      for (const auto& key : *it)
        if (!v.contains(key.get<std::string>())) errors.push_back(where + ": missing " + key.get<std::string>());
    const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
    const json* extra = schema.contains("additionalProperties") ? &schema["additionalProperties"] : nullptr;
    for (const auto& [key, value] : v.items()) {
      const std::string path = where + "/" + key;
      if (props && props->contains(key))
        check(value, (*props)[key], path, errors);
      else if (extra)
        check(value, *extra, path, errors);
    }
  }
  if (v.is_array()) {
    if (auto it = schema.find("items"); it != schema.end())
      for (std::size_t k = 0; k < v.size(); ++k) check(v[k], *it, where + "/" + std::to_string(k), errors);
  }
}

}  // namespace

std::vector<std::string> validate_schema(const json& instance, const json& schema) {
  std::vector<std::string> errors;
  check(instance, schema, "", errors);
  return errors;
}

const json& builtin_schema(SchemaId id) {
  static const json profile = json::parse(schemas::kProfile);
  static const json selection = json::parse(schemas::kSelection);
  static const json complex = json::parse(schemas::kComplex);
  static const json manifest = json::parse(schemas::kManifest);
  static const json model = json::parse(schemas::kModel);
  switch (id) {
    case SchemaId::profile: return profile;
    case SchemaId::selection: return selection;
    case SchemaId::complex: return complex;
    case SchemaId::manifest: return manifest;
    case SchemaId::model: return model;
  }
  return profile;
}

}  // namespace tconv
