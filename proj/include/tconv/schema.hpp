#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace tconv {

/// Subset of JSON Schema: type (string or list), required, properties,
/// additionalProperties (bool or schema), items, minimum, maximum, enum.
/// Returns one message per violation, each prefixed by its JSON pointer.
std::vector<std::string> validate_schema(const nlohmann::json& instance, const nlohmann::json& schema);

enum class SchemaId { profile, selection, complex, manifest, model };

const nlohmann::json& builtin_schema(SchemaId id);

}  // namespace tconv
