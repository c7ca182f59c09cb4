#include <gtest/gtest.h>

#include <random>

#include "layoutkit/example/domain.hpp"
#include "layoutkit/schema.hpp"

using namespace layoutkit;

namespace {

std::vector<std::string> element_paths(const StoragePlan& plan) {
  std::vector<std::string> out;
  for (const auto& l : plan.leaves) {
    if (l.role == LeafRole::Element) out.push_back(l.path_string());
  }
  return out;
}

}  // namespace

TEST(Scalar, SizesAndNames) {
  EXPECT_EQ(ScalarType(ScalarKind::Bool).size(), 1u);
  EXPECT_EQ(ScalarType(ScalarKind::U16).size(), 2u);
  EXPECT_EQ(ScalarType(ScalarKind::F64).size(), 8u);
  EXPECT_EQ(ScalarType::enumeration("SensorType", 4).size(), 1u);
  EXPECT_EQ(ScalarType::enumeration("Big", 70000).size(), 4u);
  EXPECT_EQ(ScalarType::enumeration("SensorType", 4).name(), "enum<SensorType,4>");
  for (const ScalarType& t : {ScalarType(ScalarKind::U64), ScalarType(ScalarKind::I32), ScalarType(ScalarKind::F32),
                              ScalarType::enumeration("K", 3)}) {
    EXPECT_EQ(parse_scalar_type(t.name()), t);
  }
  EXPECT_THROW(parse_scalar_type("f16"), SchemaError);
  EXPECT_THROW(ScalarType::enumeration("E", 0), SchemaError);
}

TEST(Scalar, IntegerRoundTripAndFormatting) {
  std::byte buf[8]{};
  store_integer(buf, ScalarKind::I32, -5);
  EXPECT_EQ(load_integer(buf, ScalarKind::I32), -5);
  store_integer(buf, ScalarKind::U16, 65535);
  EXPECT_EQ(load_integer(buf, ScalarKind::U16), 65535);
  EXPECT_EQ(format_scalar(to_raw(0.1f), ScalarKind::F32), "0.1");
  EXPECT_EQ(format_scalar(to_raw(std::int32_t{-7}), ScalarKind::I32), "-7");
  EXPECT_EQ(format_scalar(1, ScalarKind::Bool), "true");
}

TEST(Schema, PerItemDeclarations) {
  const auto e = declare_per_item("energy", ScalarKind::F32);
  EXPECT_EQ(e.kind, PropertyKind::PerItem);
  EXPECT_EQ(e.name, "energy");
  EXPECT_EQ(e.value_type, ScalarType(ScalarKind::F32));
  EXPECT_EQ(declare_per_item("counts", ScalarKind::U64).value_type, ScalarType(ScalarKind::U64));
  EXPECT_THROW(declare_per_item("", ScalarKind::F32), SchemaError);
  EXPECT_THROW(declare_per_item("9lives", ScalarKind::F32), SchemaError);
  EXPECT_THROW(declare_per_item("a.b", ScalarKind::F32), SchemaError);
}

TEST(Schema, SubGroups) {
  const auto g = declare_subgroup("calibration_data", {declare_per_item("noisy", ScalarKind::Bool),
                                                       declare_per_item("parameter_A", ScalarKind::F32),
                                                       declare_per_item("parameter_B", ScalarKind::F32),
                                                       declare_per_item("noise_A", ScalarKind::F32),
                                                       declare_per_item("noise_B", ScalarKind::F32)});
  EXPECT_EQ(g.kind, PropertyKind::SubGroup);
  EXPECT_EQ(g.children.size(), 5u);
  EXPECT_THROW(declare_subgroup("g", {declare_per_item("x", ScalarKind::U8), declare_per_item("x", ScalarKind::U8)}),
               SchemaError);
  EXPECT_THROW(declare_subgroup("g", {}), SchemaError);
}

TEST(Schema, FixedArrays) {
  const auto a = declare_simple_array("significance", 4, ScalarKind::F32);
  EXPECT_EQ(a.kind, PropertyKind::FixedArray);
  EXPECT_EQ(a.extent, 4u);
  EXPECT_EQ(declare_array("a", 1, {declare_per_item("v", ScalarKind::U8)}).extent, 1u);
  EXPECT_THROW(declare_array("a", 0, {declare_per_item("v", ScalarKind::U8)}), SchemaError);
}

TEST(Schema, JaggedVectors) {
  const auto j = declare_simple_jagged("sensors", ScalarKind::I32, ScalarKind::U64);
  EXPECT_EQ(j.kind, PropertyKind::JaggedVector);
  EXPECT_EQ(j.index_type, ScalarType(ScalarKind::I32));
  EXPECT_THROW(declare_simple_jagged("s", ScalarKind::F32, ScalarKind::U64), SchemaError);
  EXPECT_THROW(declare_jagged("s", ScalarKind::I32, {declare_simple_jagged("inner", ScalarKind::I32, ScalarKind::U8)}),
               SchemaError);
  EXPECT_THROW(
      declare_jagged("s", ScalarKind::I32,
                     {declare_array("arr", 2, {declare_simple_jagged("inner", ScalarKind::I32, ScalarKind::U8)})}),
      SchemaError);
}

TEST(Schema, Behaviors) {
  example::register_sensor_functions();
  const auto b = declare_behavior("sensor_funcs", example::kSensorFuncs);
  EXPECT_EQ(b.kind, PropertyKind::NoStorage);
  EXPECT_TRUE(b.children.empty());
  EXPECT_THROW(declare_behavior("f", "NOT_REGISTERED"), SchemaError);

  const Schema with(
      "S", {declare_per_item("x", ScalarKind::F32), declare_behavior("sensor_funcs", example::kSensorFuncs)});
  const Schema without("S", {declare_per_item("x", ScalarKind::F32)});
  EXPECT_EQ(flatten(with).leaves.size(), flatten(without).leaves.size());
  EXPECT_EQ(with.behavior_bundles(), std::vector<std::string>{example::kSensorFuncs});
  EXPECT_THROW(Schema("S", {declare_behavior("f", example::kSensorFuncs)}), SchemaError);
}

TEST(Schema, TopLevelValidation) {
  EXPECT_THROW(Schema("S", {}), SchemaError);
  EXPECT_THROW(Schema("S", {declare_per_item("x", ScalarKind::U8), declare_per_item("x", ScalarKind::U8)}),
               SchemaError);
  EXPECT_THROW(Schema("S", {declare_array("a", 2, {declare_global("g", ScalarKind::U8)})}), SchemaError);
}

TEST(Flatten, SensorSchema) {
  const StoragePlan plan = flatten(example::sensor_schema());
  EXPECT_EQ(element_paths(plan),
            (std::vector<std::string>{"type", "counts", "energy", "calibration_data.noisy",
                                      "calibration_data.parameter_A", "calibration_data.parameter_B",
                                      "calibration_data.noise_A", "calibration_data.noise_B"}));
  EXPECT_EQ(plan.leaves.size(), 8u);
  EXPECT_EQ(plan.size_tags.size(), 1u);
  for (const auto& l : plan.leaves) {
    EXPECT_EQ(l.size_tag, StoragePlan::main_tag);
    EXPECT_EQ(l.extent_multiplier, 1u);
  }
}

TEST(Flatten, ParticleSchema) {
  const StoragePlan plan = flatten(example::particle_schema());
  EXPECT_EQ(plan.size_tags.size(), 2u);
  const auto tag = plan.find_tag("sensors");
  ASSERT_TRUE(tag.has_value());
  for (const char* p : {"energy", "x", "y", "origin", "x_variance", "y_variance"}) {
    const auto leaf = plan.find_leaf(p);
    ASSERT_TRUE(leaf.has_value()) << p;
    EXPECT_EQ(plan.leaves[*leaf].extent_multiplier, 1u);
    EXPECT_EQ(plan.leaves[*leaf].size_tag, StoragePlan::main_tag);
  }
  for (const char* p : {"significance.value", "E_contribution.value", "noisy_count.value"}) {
    const auto leaf = plan.find_leaf(p);
    ASSERT_TRUE(leaf.has_value()) << p;
    EXPECT_EQ(plan.leaves[*leaf].extent_multiplier, 4u);
    EXPECT_EQ(plan.leaves[*leaf].slots, 4u);
  }
  const auto value = plan.find_leaf("sensors.value");
  ASSERT_TRUE(value.has_value());
  EXPECT_EQ(plan.leaves[*value].size_tag, *tag);
  const auto prefix = plan.find_leaf("sensors.prefix_sum", LeafRole::PrefixSum);
  ASSERT_TRUE(prefix.has_value());
  EXPECT_EQ(plan.leaves[*prefix].size_tag, StoragePlan::main_tag);
  EXPECT_EQ(plan.leaves[*prefix].value_type, ScalarType(ScalarKind::I32));
  EXPECT_EQ(plan.prefix_leaf(*tag), *prefix);
}

TEST(Flatten, JaggedInsideArrayMultipliesTag) {
  const Schema s("Nest", {declare_per_item("id", ScalarKind::U32),
                          declare_array("slots", 3, {declare_simple_jagged("hits", ScalarKind::U32, ScalarKind::F32)})});
  const StoragePlan plan = flatten(s);
  const auto tag = plan.find_tag("slots.hits");
  ASSERT_TRUE(tag.has_value());
  EXPECT_EQ(plan.size_tags[*tag].multiplier, 3u);
  const auto prefix = plan.prefix_leaf(*tag);
  EXPECT_EQ(plan.leaves[prefix].extent_multiplier, 3u);
  EXPECT_EQ(plan.leaves[prefix].role, LeafRole::PrefixSum);
  EXPECT_EQ(plan.leaves[prefix].size_tag, StoragePlan::main_tag);
  EXPECT_EQ(plan.leaves[prefix].rows_for(5), 16u);
}

namespace {

struct Expected {
  std::string path;
  std::uint64_t multiplier;
  bool jagged;
};

// Random nesting; records each PerItem leaf with the product of the
// enclosing array extents, computed here independently of flatten().
PropertyDescriptor random_property(std::mt19937& rng, int depth, const std::string& prefix, std::uint64_t mult,
                                   bool in_jagged, bool in_array, std::vector<Expected>& out, int& counter,
                                   int& jagged_count) {
  const std::string name = "p" + std::to_string(counter++);
  const std::string path = prefix.empty() ? name : prefix + "." + name;
  const int pick = depth >= 3 ? 0 : static_cast<int>(rng() % 4);
  if (pick == 0) {
    out.push_back({path, mult, in_jagged});
    return declare_per_item(name, ScalarKind::U16);
  }
  if (pick == 3 && in_jagged) {
    out.push_back({path, mult, in_jagged});
    return declare_per_item(name, ScalarKind::U16);
  }
  std::vector<PropertyDescriptor> kids;
  const int n = 1 + static_cast<int>(rng() % 3);
  const std::uint32_t extent = 1 + rng() % 4;
  for (int i = 0; i < n; ++i) {
    switch (pick) {
      case 1:
        kids.push_back(random_property(rng, depth + 1, path, mult, in_jagged, in_array, out, counter, jagged_count));
        break;
      case 2:
        kids.push_back(
            random_property(rng, depth + 1, path, mult * extent, in_jagged, true, out, counter, jagged_count));
        break;
      default:
        kids.push_back(random_property(rng, depth + 1, path, mult, true, in_array, out, counter, jagged_count));
        break;
    }
  }
  if (pick == 1) return declare_subgroup(name, std::move(kids));
  if (pick == 2) return declare_array(name, extent, std::move(kids));
  ++jagged_count;
  return declare_jagged(name, ScalarKind::U32, std::move(kids));
}

}  // namespace

TEST(Flatten, RandomSchemasMatchIndependentRecount) {
  std::mt19937 rng(2024);
  for (int round = 0; round < 300; ++round) {
    std::vector<Expected> expected;
    int counter = 0;
    int jagged = 0;
    std::vector<PropertyDescriptor> props;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) props.push_back(random_property(rng, 0, "", 1, false, false, expected, counter, jagged));
    const Schema s("R", props);
    const StoragePlan plan = flatten(s);
    EXPECT_EQ(plan, flatten(s));
    EXPECT_EQ(plan.size_tags.size(), static_cast<std::size_t>(jagged) + 1);
    EXPECT_EQ(plan.element_leaf_count(), expected.size());
    std::size_t prefix_leaves = 0;
    for (const auto& l : plan.leaves) prefix_leaves += l.role == LeafRole::PrefixSum ? 1 : 0;
    EXPECT_EQ(prefix_leaves, static_cast<std::size_t>(jagged));
    for (const auto& e : expected) {
      const auto leaf = plan.find_leaf(e.path);
      ASSERT_TRUE(leaf.has_value()) << e.path;
      EXPECT_EQ(plan.leaves[*leaf].extent_multiplier, e.multiplier) << e.path;
      EXPECT_EQ(plan.leaves[*leaf].size_tag != StoragePlan::main_tag, e.jagged) << e.path;
    }
  }
}
