#pragma once

#include <string>
#include <string_view>

#include "layoutkit/schema.hpp"

namespace layoutkit {

/// JSON declaration file:
///   {"format": "layoutkit-schema", "version": 1, "name": "...",
///    "properties": [{"name": "...", "kind": "per_item", "type": "f32"}, ...]}
/// kind is one of per_item, global, behavior (with "bundle"), subgroup,
/// array (with "extent"), jagged (with "index_type"); the last three take
/// "children".
std::string schema_to_json(const Schema& schema, int indent = 2);
Schema schema_from_json(std::string_view text);

Schema load_schema_file(const std::string& path);
void save_schema_file(const Schema& schema, const std::string& path);

/// Human-readable storage plan: size tags, then one line per leaf.
std::string describe_plan(const StoragePlan& plan);

/// C++ header text declaring a struct of typed handles for every stored
/// leaf and jagged vector of the schema, resolved from a Collection.
std::string generate_accessors(const Schema& schema);

}  // namespace layoutkit
