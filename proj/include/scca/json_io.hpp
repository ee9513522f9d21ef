#pragma once

#include <string>

#include <json.hpp>

namespace scca {

using Json = nlohmann::ordered_json;

/// "%.17g" rendering; non-finite values render as JSON null in documents.
std::string format_double(double v);

/// Serializes with every floating-point number at 17 significant digits.
std::string dump_json(const Json& doc, int indent = 2);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Checks `doc` against the subset of JSON Schema used by the shipped schema
/// files: type, properties, required, additionalProperties (boolean), items,
/// enum, minimum, maximum, exclusiveMinimum, exclusiveMaximum, minItems,
/// minLength, anyOf and $ref into #/definitions. Returns an empty string when
/// valid, else the first violation with its JSON pointer.
std::string validate_schema(const Json& doc, const Json& schema);

/// Validates against the schema file at `schema_path`; throws ValidationError.
void require_schema(const Json& doc, const std::string& schema_path);

/// Directory with the shipped schema files: $SCCA_SCHEMA_DIR if set, else
/// the install-time default.
std::string default_schema_dir();

}  // namespace scca
