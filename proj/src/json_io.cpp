#include "scca/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "scca/errors.hpp"

#ifndef SCCA_DEFAULT_SCHEMA_DIR
#define SCCA_DEFAULT_SCHEMA_DIR "schemas"
#endif

namespace scca {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void dump_into(const Json& j, int indent, int depth, std::string& out) {
    const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
    const std::string pad_close = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
    const char* nl = indent > 0 ? "\n" : "";
    const char* colon = indent > 0 ? ": " : ":";
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{";
            out += nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) {
                    out += ",";
                    out += nl;
                }
                first = false;
                out += pad;
                out += Json(it.key()).dump();
                out += colon;
                dump_into(it.value(), indent, depth + 1, out);
            }
            out += nl;
            out += pad_close;
            out += "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[";
            out += nl;
            bool first = true;
            for (const auto& el : j) {
                if (!first) {
                    out += ",";
                    out += nl;
                }
                first = false;
                out += pad;
                dump_into(el, indent, depth + 1, out);
            }
            out += nl;
            out += pad_close;
            out += "]";
            return;
        }
        case Json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                out += "null";
                return;
            }
            std::string s = format_double(v);
            // keep the value a JSON float so it re-reads as double
            if (s.find_first_of(".eE") == std::string::npos) s += ".0";
            out += s;
            return;
        }
        default:
            out += j.dump();
    }
}

std::string type_of(const Json& j) {
    switch (j.type()) {
        case Json::value_t::object: return "object";
        case Json::value_t::array: return "array";
        case Json::value_t::string: return "string";
        case Json::value_t::boolean: return "boolean";
        case Json::value_t::null: return "null";
        case Json::value_t::number_integer:
        case Json::value_t::number_unsigned: return "integer";
        default: return "number";
    }
}

bool matches_type(const Json& j, const std::string& type) {
    const std::string actual = type_of(j);
    if (type == actual) return true;
    if (type == "number" && actual == "integer") return true;
    if (type == "integer" && actual == "number") {
        const double v = j.get<double>();
        return std::isfinite(v) && std::floor(v) == v;
    }
    return false;
}

std::string check(const Json& doc, const Json& schema, const Json& root, const std::string& where) {
    if (schema.contains("$ref")) {
        const std::string ref = schema["$ref"].get<std::string>();
        const std::string prefix = "#/definitions/";
        if (ref.rfind(prefix, 0) != 0 || !root.contains("definitions") ||
            !root["definitions"].contains(ref.substr(prefix.size()))) {
            return where + ": unresolvable $ref " + ref;
        }
        return check(doc, root["definitions"][ref.substr(prefix.size())], root, where);
    }
    if (schema.contains("anyOf")) {
        std::string first;
        for (const auto& alt : schema["anyOf"]) {
            const std::string err = check(doc, alt, root, where);
            if (err.empty()) {
                first.clear();
                break;
            }
            if (first.empty()) first = err;
        }
        if (!first.empty()) return where + ": no anyOf alternative matches (" + first + ")";
    }
    if (schema.contains("type")) {
        const Json& t = schema["type"];
        bool ok = false;
        if (t.is_string()) {
            ok = matches_type(doc, t.get<std::string>());
        } else {
            for (const auto& alt : t) ok = ok || matches_type(doc, alt.get<std::string>());
        }
        if (!ok) return where + ": expected type " + t.dump() + ", got " + type_of(doc);
    }
    if (schema.contains("enum")) {
        bool ok = false;
        for (const auto& e : schema["enum"]) ok = ok || e == doc;
        if (!ok) return where + ": value " + doc.dump() + " not in enum";
    }
    if (doc.is_number()) {
        const double v = doc.get<double>();
        if (schema.contains("minimum") && v < schema["minimum"].get<double>()) return where + ": below minimum";
        if (schema.contains("maximum") && v > schema["maximum"].get<double>()) return where + ": above maximum";
        if (schema.contains("exclusiveMinimum") && v <= schema["exclusiveMinimum"].get<double>())
            return where + ": not above exclusiveMinimum";
        if (schema.contains("exclusiveMaximum") && v >= schema["exclusiveMaximum"].get<double>())
            return where + ": not below exclusiveMaximum";
    }
    if (doc.is_string() && schema.contains("minLength") &&
        doc.get<std::string>().size() < schema["minLength"].get<std::size_t>()) {
        return where + ": string shorter than minLength";
    }
    if (doc.is_object()) {
        if (schema.contains("required")) {
            for (const auto& key : schema["required"]) {
                if (!doc.contains(key.get<std::string>())) return where + ": missing required key '" + key.get<std::string>() + "'";
            }
        }
        const bool closed = schema.contains("additionalProperties") && schema["additionalProperties"].is_boolean() &&
                            !schema["additionalProperties"].get<bool>();
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            const std::string sub = where + "/" + it.key();
            if (schema.contains("properties") && schema["properties"].contains(it.key())) {
                const std::string err = check(it.value(), schema["properties"][it.key()], root, sub);
                if (!err.empty()) return err;
            } else if (closed) {
                return sub + ": unexpected key";
            }
        }
    }
    if (doc.is_array()) {
        if (schema.contains("minItems") && doc.size() < schema["minItems"].get<std::size_t>())
            return where + ": fewer than minItems entries";
        if (schema.contains("items")) {
            for (std::size_t i = 0; i < doc.size(); ++i) {
                const std::string err = check(doc[i], schema["items"], root, where + "/" + std::to_string(i));
                if (!err.empty()) return err;
            }
        }
    }
    return {};
}

}  // namespace

std::string dump_json(const Json& doc, int indent) {
    std::string out;
    dump_into(doc, indent, 0, out);
    out += "\n";
    return out;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ValidationError("invalid JSON in '" + path + "': " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string validate_schema(const Json& doc, const Json& schema) { return check(doc, schema, schema, ""); }

void require_schema(const Json& doc, const std::string& schema_path) {
    const Json schema = read_json_file(schema_path);
    const std::string err = validate_schema(doc, schema);
    if (!err.empty()) throw ValidationError("schema violation at " + (err[0] == ':' ? "(root)" + err : err));
}

std::string default_schema_dir() {
    if (const char* env = std::getenv("SCCA_SCHEMA_DIR"); env != nullptr && *env != '\0') return env;
    return SCCA_DEFAULT_SCHEMA_DIR;
}

}  // namespace scca
