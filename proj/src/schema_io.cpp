#include "layoutkit/schema_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "layoutkit/errors.hpp"

namespace layoutkit {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "layoutkit-schema";
constexpr int kVersion = 1;

std::string_view kind_name(PropertyKind k) {
  switch (k) {
    case PropertyKind::PerItem: return "per_item";
    case PropertyKind::Global: return "global";
    case PropertyKind::NoStorage: return "behavior";
    case PropertyKind::SubGroup: return "subgroup";
    case PropertyKind::FixedArray: return "array";
    case PropertyKind::JaggedVector: return "jagged";
  }
  return "?";
}

json to_json(const PropertyDescriptor& d) {
  json j;
  j["name"] = d.name;
  j["kind"] = kind_name(d.kind);
  switch (d.kind) {
    case PropertyKind::PerItem:
    case PropertyKind::Global: j["type"] = d.value_type.name(); break;
    case PropertyKind::NoStorage: j["bundle"] = d.bundle; break;
    case PropertyKind::FixedArray: j["extent"] = d.extent; break;
    case PropertyKind::JaggedVector: j["index_type"] = d.index_type.name(); break;
    case PropertyKind::SubGroup: break;
  }
  if (!d.children.empty()) {
    j["children"] = json::array();
    for (const auto& c : d.children) j["children"].push_back(to_json(c));
  }
  return j;
}

const json& member(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(where + ": missing \"" + key + "\"");
  return *it;
}

std::string text_member(const json& j, const char* key, const std::string& where) {
  const json& v = member(j, key, where);
  if (!v.is_string()) throw SchemaError(where + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

std::vector<PropertyDescriptor> children_from_json(const json& j, const std::string& where);

PropertyDescriptor from_json(const json& j, const std::string& parent) {
  if (!j.is_object()) throw SchemaError(parent + ": property must be an object");
  const std::string name = text_member(j, "name", parent);
  const std::string where = parent.empty() ? name : parent + "." + name;
  const std::string kind = text_member(j, "kind", where);
  if (kind == "per_item") return declare_per_item(name, parse_scalar_type(text_member(j, "type", where)));
  if (kind == "global") return declare_global(name, parse_scalar_type(text_member(j, "type", where)));
  if (kind == "behavior") return declare_behavior(name, text_member(j, "bundle", where));
  if (kind == "subgroup") return declare_subgroup(name, children_from_json(j, where));
  if (kind == "array") {
    const json& e = member(j, "extent", where);
    if (!e.is_number_unsigned()) throw SchemaError(where + ": \"extent\" must be a non-negative integer");
    return declare_array(name, e.get<std::uint32_t>(), children_from_json(j, where));
  }
  if (kind == "jagged") {
    return declare_jagged(name, parse_scalar_type(text_member(j, "index_type", where)), children_from_json(j, where));
  }
  throw SchemaError(where + ": unknown property kind '" + kind + "'");
}

std::vector<PropertyDescriptor> children_from_json(const json& j, const std::string& where) {
  const json& list = member(j, j.contains("properties") ? "properties" : "children", where);
  if (!list.is_array()) throw SchemaError(where + ": children must be an array");
  std::vector<PropertyDescriptor> out;
  for (const auto& c : list) out.push_back(from_json(c, where));
  return out;
}

std::string cpp_type(const ScalarType& t) {
  switch (t.kind) {
    case ScalarKind::Bool: return "bool";
    case ScalarKind::U8: return "std::uint8_t";
    case ScalarKind::U16: return "std::uint16_t";
    case ScalarKind::U32: return "std::uint32_t";
    case ScalarKind::U64: return "std::uint64_t";
    case ScalarKind::I32: return "std::int32_t";
    case ScalarKind::I64: return "std::int64_t";
    case ScalarKind::F32: return "float";
    case ScalarKind::F64: return "double";
    case ScalarKind::Enum: return "std::uint" + std::to_string(t.size() * 8) + "_t";
  }
  return "void";
}

std::string identifier(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) out += (out.empty() ? "" : "_") + p;
  return out;
}

}  // namespace

std::string schema_to_json(const Schema& schema, int indent) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["name"] = schema.name();
  j["properties"] = json::array();
  for (const auto& p : schema.properties()) j["properties"].push_back(to_json(p));
  return j.dump(indent) + "\n";
}

Schema schema_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("schema file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("schema file must hold a JSON object");
  if (text_member(j, "format", "schema") != kFormat) throw SchemaError("schema file has an unknown format tag");
  const json& v = member(j, "version", "schema");
  if (!v.is_number_integer() || v.get<int>() != kVersion) throw SchemaError("unsupported schema file version");
  const std::string name = text_member(j, "name", "schema");
  return Schema(name, children_from_json(j, ""));
}

Schema load_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schema file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return schema_from_json(text.str());
}

void save_schema_file(const Schema& schema, const std::string& path) {
  std::ofstream out(path);
  out << schema_to_json(schema);
  if (!out) throw Error("cannot write schema file '" + path + "'");
}

std::string describe_plan(const StoragePlan& plan) {
  std::ostringstream out;
  out << "size tags\n";
  for (const auto& t : plan.size_tags) out << "  " << t.id << " multiplier " << t.multiplier << '\n';
  out << "leaves\n";
  for (const auto& l : plan.leaves) {
    out << "  " << l.path_string() << ' ' << to_string(l.role) << ' ' << l.value_type.name() << " tag "
        << plan.size_tags[l.size_tag].id << " extent_multiplier " << l.extent_multiplier << " slots " << l.slots
        << '\n';
  }
  return out.str();
}

std::string generate_accessors(const Schema& schema) {
  const StoragePlan plan = flatten(schema);
  std::ostringstream out;
  out << "// Generated from schema " << schema.name() << ".\n#pragma once\n\n#include <cstdint>\n\n"
      << "#include \"layoutkit/collection.hpp\"\n\n"
      << "struct " << schema.name() << "Fields {\n";
  for (const auto& l : plan.leaves) {
    if (l.role == LeafRole::PrefixSum) continue;
    out << "  layoutkit::Field<" << cpp_type(l.value_type) << "> " << identifier(l.path) << ";\n";
  }
  for (std::size_t t = 1; t < plan.size_tags.size(); ++t) {
    out << "  layoutkit::JaggedHandle " << identifier(plan.size_tags[t].jagged_path) << "_vector;\n";
  }
  out << "\n  explicit " << schema.name() << "Fields(const layoutkit::Collection& c)";
  char sep = ':';
  for (const auto& l : plan.leaves) {
    if (l.role == LeafRole::PrefixSum) continue;
    out << "\n      " << sep << ' ' << identifier(l.path) << "(c.field<" << cpp_type(l.value_type) << ">(\""
        << l.path_string() << "\"))";
    sep = ',';
  }
  for (std::size_t t = 1; t < plan.size_tags.size(); ++t) {
    out << "\n      " << sep << ' ' << identifier(plan.size_tags[t].jagged_path) << "_vector(c.jagged(\""
        << plan.size_tags[t].id << "\"))";
  }
  out << " {}\n};\n";
  return out.str();
}

}  // namespace layoutkit
