#include "layoutkit/schema.hpp"

#include <set>

#include "layoutkit/behavior.hpp"
#include "layoutkit/errors.hpp"

namespace layoutkit {

std::string_view to_string(PropertyKind kind) {
  switch (kind) {
    case PropertyKind::PerItem: return "per_item";
    case PropertyKind::Global: return "global";
    case PropertyKind::NoStorage: return "behavior";
    case PropertyKind::SubGroup: return "subgroup";
    case PropertyKind::FixedArray: return "array";
    case PropertyKind::JaggedVector: return "jagged";
  }
  return "?";
}

std::string_view to_string(LeafRole role) {
  switch (role) {
    case LeafRole::Element: return "element";
    case LeafRole::PrefixSum: return "prefix_sum";
    case LeafRole::Global: return "global";
  }
  return "?";
}

bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(name.front())) return false;
  for (char c : name) {
    if (!alpha(c) && !(c >= '0' && c <= '9')) return false;
  }
  return true;
}

namespace {

void require_identifier(std::string_view name) {
  if (!is_identifier(name)) throw SchemaError("invalid identifier '" + std::string(name) + "'");
}

void require_children(std::string_view parent, const std::vector<PropertyDescriptor>& children) {
  if (children.empty()) throw SchemaError("property '" + std::string(parent) + "' has no children");
  std::set<std::string_view> seen;
  for (const auto& c : children) {
    if (!seen.insert(c.name).second) {
      throw SchemaError("duplicate property '" + c.name + "' in '" + std::string(parent) + "'");
    }
  }
}

bool contains_jagged(const std::vector<PropertyDescriptor>& children) {
  for (const auto& c : children) {
    if (c.kind == PropertyKind::JaggedVector || contains_jagged(c.children)) return true;
  }
  return false;
}

bool contains_storage(const PropertyDescriptor& d) {
  switch (d.kind) {
    case PropertyKind::PerItem:
    case PropertyKind::Global: return true;
    case PropertyKind::NoStorage: return false;
    default:
      for (const auto& c : d.children) {
        if (contains_storage(c)) return true;
      }
      return false;
  }
}

struct Scope {
  bool inside_array = false;
  bool inside_jagged = false;
};

void validate(const PropertyDescriptor& d, Scope scope) {
  require_identifier(d.name);
  switch (d.kind) {
    case PropertyKind::PerItem:
      if (!d.children.empty()) throw SchemaError("per-item property '" + d.name + "' cannot have children");
      if (d.value_type.kind == ScalarKind::Enum && d.value_type.cardinality == 0) {
        throw SchemaError("enum of '" + d.name + "' must have cardinality >= 1");
      }
      return;
    case PropertyKind::Global:
      if (!d.children.empty()) throw SchemaError("global property '" + d.name + "' cannot have children");
      if (scope.inside_array || scope.inside_jagged) {
        throw SchemaError("global property '" + d.name + "' cannot be nested in an array or jagged vector");
      }
      return;
    case PropertyKind::NoStorage:
      if (!d.children.empty()) throw SchemaError("behavior property '" + d.name + "' cannot have children");
      if (d.bundle.empty()) throw SchemaError("behavior property '" + d.name + "' has no bundle id");
      return;
    case PropertyKind::SubGroup:
      require_children(d.name, d.children);
      break;
    case PropertyKind::FixedArray:
      if (d.extent == 0) throw SchemaError("array property '" + d.name + "' must have extent >= 1");
      require_children(d.name, d.children);
      scope.inside_array = true;
      break;
    case PropertyKind::JaggedVector:
      if (!d.index_type.is_integer()) {
        throw SchemaError("jagged vector '" + d.name + "' needs an integer index type, got " + d.index_type.name());
      }
      require_children(d.name, d.children);
      if (contains_jagged(d.children)) {
        throw SchemaError("jagged vector '" + d.name + "' cannot contain another jagged vector");
      }
      if (!contains_storage(d)) {
        throw SchemaError("jagged vector '" + d.name + "' must hold at least one stored property");
      }
      scope.inside_jagged = true;
      break;
  }
  for (const auto& c : d.children) validate(c, scope);
}

PropertyDescriptor nest(std::string name, PropertyKind kind, std::vector<PropertyDescriptor> children) {
  PropertyDescriptor d;
  d.name = std::move(name);
  d.kind = kind;
  d.children = std::move(children);
  return d;
}

}  // namespace

PropertyDescriptor declare_per_item(std::string name, ScalarType value_type) {
  require_identifier(name);
  PropertyDescriptor d;
  d.name = std::move(name);
  d.kind = PropertyKind::PerItem;
  d.value_type = std::move(value_type);
  return d;
}

PropertyDescriptor declare_global(std::string name, ScalarType value_type) {
  auto d = declare_per_item(std::move(name), std::move(value_type));
  d.kind = PropertyKind::Global;
  return d;
}

PropertyDescriptor declare_subgroup(std::string name, std::vector<PropertyDescriptor> children) {
  auto d = nest(std::move(name), PropertyKind::SubGroup, std::move(children));
  validate(d, {});
  return d;
}

PropertyDescriptor declare_array(std::string name, std::uint32_t extent, std::vector<PropertyDescriptor> children) {
  auto d = nest(std::move(name), PropertyKind::FixedArray, std::move(children));
  d.extent = extent;
  validate(d, {});
  return d;
}

PropertyDescriptor declare_simple_array(std::string name, std::uint32_t extent, ScalarType value_type) {
  return declare_array(std::move(name), extent, {declare_per_item("value", std::move(value_type))});
}

PropertyDescriptor declare_jagged(std::string name, ScalarType index_type, std::vector<PropertyDescriptor> children) {
  auto d = nest(std::move(name), PropertyKind::JaggedVector, std::move(children));
  d.index_type = std::move(index_type);
  validate(d, {});
  return d;
}

PropertyDescriptor declare_simple_jagged(std::string name, ScalarType index_type, ScalarType value_type) {
  return declare_jagged(std::move(name), std::move(index_type), {declare_per_item("value", std::move(value_type))});
}

PropertyDescriptor declare_behavior(std::string name, std::string bundle_id) {
  return declare_behavior(std::move(name), std::move(bundle_id), BehaviorRegistry::global());
}

PropertyDescriptor declare_behavior(std::string name, std::string bundle_id, const BehaviorRegistry& registry) {
  require_identifier(name);
  if (!registry.contains(bundle_id)) throw SchemaError("unknown behavior bundle '" + bundle_id + "'");
  PropertyDescriptor d;
  d.name = std::move(name);
  d.kind = PropertyKind::NoStorage;
  d.bundle = std::move(bundle_id);
  return d;
}

Schema::Schema(std::string name, std::vector<PropertyDescriptor> properties)
    : name_(std::move(name)), properties_(std::move(properties)) {
  require_identifier(name_);
  if (properties_.empty()) throw SchemaError("schema '" + name_ + "' has no properties");
  std::set<std::string_view> seen;
  bool storage = false;
  for (const auto& p : properties_) {
    if (!seen.insert(p.name).second) throw SchemaError("duplicate property '" + p.name + "' in schema " + name_);
    validate(p, {});
    storage = storage || contains_storage(p);
  }
  if (!storage) throw SchemaError("schema '" + name_ + "' has no storage-bearing property");
}

const PropertyDescriptor* Schema::find(std::string_view path) const {
  const std::vector<PropertyDescriptor>* level = &properties_;
  const PropertyDescriptor* found = nullptr;
  for (const auto& part : split_path(path)) {
    found = nullptr;
    for (const auto& d : *level) {
      if (d.name == part) {
        found = &d;
        break;
      }
    }
    if (found == nullptr) return nullptr;
    level = &found->children;
  }
  return found;
}

std::vector<std::string> Schema::behavior_bundles() const {
  std::vector<std::string> out;
  auto walk = [&](auto&& self, const std::vector<PropertyDescriptor>& ds) -> void {
    for (const auto& d : ds) {
      if (d.kind == PropertyKind::NoStorage) out.push_back(d.bundle);
      self(self, d.children);
    }
  };
  walk(walk, properties_);
  return out;
}

std::string join_path(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) {
    if (!out.empty()) out += '.';
    out += p;
  }
  return out;
}

std::vector<std::string> split_path(std::string_view dotted) {
  std::vector<std::string> out;
  while (!dotted.empty()) {
    auto dot = dotted.find('.');
    out.emplace_back(dotted.substr(0, dot));
    if (dot == std::string_view::npos) break;
    dotted.remove_prefix(dot + 1);
  }
  return out;
}

std::string LeafField::path_string() const { return join_path(path); }

std::optional<std::size_t> StoragePlan::find_leaf(std::string_view path, LeafRole role) const {
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (leaves[i].role == role && leaves[i].path_string() == path) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> StoragePlan::find_tag(std::string_view id) const {
  for (std::size_t i = 0; i < size_tags.size(); ++i) {
    if (size_tags[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> StoragePlan::leaves_under(std::size_t tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (leaves[i].size_tag == tag) out.push_back(i);
  }
  return out;
}

std::size_t StoragePlan::prefix_leaf(std::size_t jagged_tag) const {
  auto found = find_leaf(size_tags.at(jagged_tag).id + ".prefix_sum", LeafRole::PrefixSum);
  if (!found) throw SchemaError("no prefix-sum leaf for tag " + size_tags.at(jagged_tag).id);
  return *found;
}

std::size_t StoragePlan::element_leaf_count() const {
  std::size_t n = 0;
  for (const auto& l : leaves) n += l.role == LeafRole::Element ? 1 : 0;
  return n;
}

namespace {

struct Flattener {
  StoragePlan plan;

  // `outer` is the product of all enclosing array extents, `inner` the
  // product of those below the nearest enclosing jagged vector.
  void walk(const std::vector<PropertyDescriptor>& ds, std::vector<std::string>& path, std::uint64_t outer,
            std::uint64_t inner, std::size_t tag) {
    for (const auto& d : ds) {
      path.push_back(d.name);
      switch (d.kind) {
        case PropertyKind::PerItem: {
          LeafField leaf;
          leaf.path = path;
          leaf.value_type = d.value_type;
          leaf.size_tag = tag;
          leaf.extent_multiplier = outer;
          leaf.slots = inner;
          plan.leaves.push_back(std::move(leaf));
          break;
        }
        case PropertyKind::Global: {
          LeafField leaf;
          leaf.path = path;
          leaf.value_type = d.value_type;
          leaf.size_tag = StoragePlan::main_tag;
          leaf.role = LeafRole::Global;
          leaf.rows_per_unit = 0;
          leaf.row_offset = 1;
          plan.leaves.push_back(std::move(leaf));
          break;
        }
        case PropertyKind::NoStorage: break;
        case PropertyKind::SubGroup: walk(d.children, path, outer, inner, tag); break;
        case PropertyKind::FixedArray: walk(d.children, path, outer * d.extent, inner * d.extent, tag); break;
        case PropertyKind::JaggedVector: {
          SizeTag jt;
          jt.id = join_path(path);
          jt.jagged_path = path;
          jt.multiplier = outer;
          plan.size_tags.push_back(std::move(jt));
          const std::size_t jagged_tag = plan.size_tags.size() - 1;

          LeafField prefix;
          prefix.path = path;
          prefix.path.push_back("prefix_sum");
          prefix.value_type = d.index_type;
          prefix.size_tag = StoragePlan::main_tag;
          prefix.extent_multiplier = outer;
          prefix.role = LeafRole::PrefixSum;
          prefix.slots = 1;
          prefix.rows_per_unit = outer;
          prefix.row_offset = 1;
          plan.leaves.push_back(std::move(prefix));

          walk(d.children, path, outer, 1, jagged_tag);
          break;
        }
      }
      path.pop_back();
    }
  }
};

}  // namespace

StoragePlan flatten(const Schema& schema) {
  Flattener f;
  SizeTag main;
  main.id = "main";
  f.plan.size_tags.push_back(main);
  std::vector<std::string> path;
  f.walk(schema.properties(), path, 1, 1, StoragePlan::main_tag);
  return std::move(f.plan);
}

}  // namespace layoutkit
