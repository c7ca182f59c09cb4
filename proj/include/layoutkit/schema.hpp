#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layoutkit/scalar.hpp"

namespace layoutkit {

class BehaviorRegistry;

enum class PropertyKind : std::uint8_t { PerItem, Global, NoStorage, SubGroup, FixedArray, JaggedVector };

std::string_view to_string(PropertyKind kind);

/// One node of a record description. Which members are meaningful depends on
/// `kind`: value_type for PerItem/Global, bundle for NoStorage, extent for
/// FixedArray, index_type for JaggedVector, children for the three nesting
/// kinds.
struct PropertyDescriptor {
  std::string name;
  PropertyKind kind = PropertyKind::PerItem;
  ScalarType value_type;
  ScalarType index_type;
  std::uint32_t extent = 0;
  std::string bundle;
  std::vector<PropertyDescriptor> children;

  friend bool operator==(const PropertyDescriptor&, const PropertyDescriptor&) = default;
};

PropertyDescriptor declare_per_item(std::string name, ScalarType value_type);
PropertyDescriptor declare_global(std::string name, ScalarType value_type);
PropertyDescriptor declare_subgroup(std::string name, std::vector<PropertyDescriptor> children);
PropertyDescriptor declare_array(std::string name, std::uint32_t extent,
                                 std::vector<PropertyDescriptor> children);
/// Array holding a single per-item child named "value".
PropertyDescriptor declare_simple_array(std::string name, std::uint32_t extent, ScalarType value_type);
PropertyDescriptor declare_jagged(std::string name, ScalarType index_type,
                                  std::vector<PropertyDescriptor> children);
/// Jagged vector holding a single per-item child named "value".
PropertyDescriptor declare_simple_jagged(std::string name, ScalarType index_type, ScalarType value_type);
PropertyDescriptor declare_behavior(std::string name, std::string bundle_id);
PropertyDescriptor declare_behavior(std::string name, std::string bundle_id, const BehaviorRegistry& registry);

bool is_identifier(std::string_view name);

/// A named, validated list of top-level properties. Immutable once built.
class Schema {
 public:
  Schema(std::string name, std::vector<PropertyDescriptor> properties);

  const std::string& name() const { return name_; }
  const std::vector<PropertyDescriptor>& properties() const { return properties_; }

  /// Descriptor reached by a dotted path ("calibration_data.noise_A").
  const PropertyDescriptor* find(std::string_view path) const;

  /// Bundle ids of every NoStorage descriptor, in declaration order.
  std::vector<std::string> behavior_bundles() const;

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::string name_;
  std::vector<PropertyDescriptor> properties_;
};

enum class LeafRole : std::uint8_t { Element, PrefixSum, Global };

std::string_view to_string(LeafRole role);

struct SizeTag {
  std::string id;                        // "main" or the dotted jagged path
  std::vector<std::string> jagged_path;  // empty for the main tag
  /// Number of vectors per record: product of the FixedArray extents that
  /// enclose the jagged vector (1 for the main tag).
  std::uint64_t multiplier = 1;

  bool is_main() const { return jagged_path.empty(); }
  friend bool operator==(const SizeTag&, const SizeTag&) = default;
};

/// One physical array of the storage plan.
///
/// Storage is a rows x slots matrix of `value_type`. The row count follows
/// the owning tag's size: rows = size(tag) * rows_per_unit + row_offset.
/// Element leaves use (1, 0); a prefix-sum leaf uses (multiplier, 1) so that
/// it holds size * multiplier + 1 offsets; a global leaf uses (0, 1).
/// Logical flat index of (row, slot) is slot * rows + row.
struct LeafField {
  std::vector<std::string> path;
  ScalarType value_type;
  std::size_t size_tag = 0;
  std::uint64_t extent_multiplier = 1;
  LeafRole role = LeafRole::Element;
  std::uint64_t slots = 1;
  std::uint64_t rows_per_unit = 1;
  std::uint64_t row_offset = 0;

  std::string path_string() const;
  std::uint64_t rows_for(std::uint64_t tag_size) const { return tag_size * rows_per_unit + row_offset; }
  std::size_t element_size() const { return value_type.size(); }

  friend bool operator==(const LeafField&, const LeafField&) = default;
};

struct StoragePlan {
  std::vector<LeafField> leaves;
  std::vector<SizeTag> size_tags;

  static constexpr std::size_t main_tag = 0;

  std::optional<std::size_t> find_leaf(std::string_view path, LeafRole role = LeafRole::Element) const;
  std::optional<std::size_t> find_tag(std::string_view id) const;
  std::vector<std::size_t> leaves_under(std::size_t tag) const;
  /// Prefix-sum leaf belonging to a jagged tag.
  std::size_t prefix_leaf(std::size_t jagged_tag) const;
  std::size_t element_leaf_count() const;

  friend bool operator==(const StoragePlan&, const StoragePlan&) = default;
};

/// Depth-first, declaration-ordered flattening of a schema into leaves. A
/// jagged vector emits its prefix-sum leaf ("<path>.prefix_sum") ahead of
/// its children.
StoragePlan flatten(const Schema& schema);

std::string join_path(const std::vector<std::string>& path);
std::vector<std::string> split_path(std::string_view dotted);

}  // namespace layoutkit
