#pragma once
// Validator for the JSON Schema subset used by the shipped config schema:
// type, required, properties, additionalProperties, items, enum,
// minimum/maximum, exclusiveMinimum, minItems/maxItems, minLength.

#include <string>
#include <vector>

#include "json.hpp"

namespace h2atlas::service {

/// One message per violation, prefixed with a JSON pointer.
std::vector<std::string> schema_violations(const nlohmann::json& schema, const nlohmann::json& doc);

/// schema/config.schema.json, compiled in.
const nlohmann::json& config_schema();

}  // namespace h2atlas::service
