#include <gtest/gtest.h>

#include "layoutkit/example/domain.hpp"
#include "layoutkit/transfer.hpp"
#include "support/oracle.hpp"

using namespace layoutkit;

namespace {

std::string host_dump(const Collection& c) {
  if (c.context_info().context == kHostContext) return c.dump();
  return copy_to(c, LayoutSpec::per_field(), ContextInfo::host()).dump();
}

std::vector<LayoutSpec> specs() {
  return {LayoutSpec::per_field(), layoutkit::testing::fuzz_arena_spec(), LayoutSpec::aos()};
}

Collection random_source(std::uint64_t seed, std::size_t n) {
  Collection c(layoutkit::testing::fuzz_schema());
  layoutkit::testing::Rng rng(seed);
  layoutkit::testing::fill_random(c, n, rng);
  return c;
}

}  // namespace

TEST(Transfer, RoundTripsAcrossLayoutsAndContexts) {
  const Collection src = random_source(21, 20);
  const std::string expected = src.dump();
  for (const auto& spec : specs()) {
    for (const auto& info : {ContextInfo::host(), ContextInfo::mockdev()}) {
      Collection mid = copy_to(src, spec, info);
      EXPECT_EQ(mid.context_info().context, info.context);
      EXPECT_EQ(host_dump(mid), expected) << to_string(spec.kind) << " " << info.context;
      Collection back(src.schema());
      copy_collection(back, mid);
      EXPECT_EQ(back.dump(), expected);
    }
  }
}

TEST(Transfer, OverwritesLargerDestination) {
  const Collection src = random_source(4, 3);
  Collection dst = random_source(5, 30);
  copy_collection(dst, src);
  EXPECT_EQ(dst.dump(), src.dump());
  dst.check_invariants();
}

TEST(Transfer, SchemaMismatchAndAliasing) {
  Collection a(example::sensor_schema());
  Collection b(example::particle_schema());
  EXPECT_THROW(copy_collection(a, b), TransferError);
  EXPECT_THROW(copy_collection(a, a), TransferError);
}

TEST(Transfer, ArenaToArenaIsOneBlockCopy) {
  Collection src(layoutkit::testing::fuzz_schema(), layoutkit::testing::fuzz_arena_spec());
  layoutkit::testing::Rng rng(8);
  layoutkit::testing::fill_random(src, 10, rng);
  for (const auto& info : {ContextInfo::host(), ContextInfo::mockdev()}) {
    Collection dst(src.schema(), layoutkit::testing::fuzz_arena_spec(), info);
    const TransferStats stats = copy_collection(dst, src);
    EXPECT_EQ(stats.specification, "arena_block");
    EXPECT_EQ(stats.copy_ops, dst.layout().buffers().size());
    EXPECT_EQ(stats.copy_ops, 1u);
    EXPECT_EQ(host_dump(dst), src.dump());
  }
}

TEST(Transfer, DifferentArenaSpecsFallBackToPerLeaf) {
  Collection src(layoutkit::testing::fuzz_schema(), layoutkit::testing::fuzz_arena_spec());
  layoutkit::testing::Rng rng(8);
  layoutkit::testing::fill_random(src, 10, rng);
  ArenaSpec other = layoutkit::testing::fuzz_arena_spec().arena;
  other.capacities["main"] = 128;
  Collection dst(src.schema(), LayoutSpec::single_block(other));
  EXPECT_FALSE(same_arena_spec(dst, src));
  EXPECT_EQ(copy_collection(dst, src).specification, "per_leaf");
  EXPECT_EQ(dst.dump(), src.dump());
}

TEST(Transfer, ExactPairSpecificationWins) {
  TransferRegistry registry;
  int calls = 0;
  registry.register_spec({"spy", TransferPriority::ExactPair,
                          [](const Collection& d, const Collection& s) {
                            return d.layout_kind() == LayoutKind::Aos && s.layout_kind() == LayoutKind::PerField;
                          },
                          [&calls](Collection& d, const Collection& s, const CopyOptions& o) {
                            ++calls;
                            per_leaf_copy(d, s, o);
                          }});
  EXPECT_THROW(registry.register_spec({"spy", TransferPriority::ExactPair, nullptr, nullptr}), TransferError);

  const Collection src = random_source(2, 6);
  Collection dst(src.schema(), LayoutSpec::aos());
  const TransferStats stats = copy_collection(dst, src, {}, registry);
  EXPECT_EQ(stats.specification, "spy");
  EXPECT_EQ(stats.priority, TransferPriority::ExactPair);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(dst.dump(), src.dump());

  Collection other(src.schema());
  EXPECT_EQ(copy_collection(other, src, {}, registry).specification, "per_leaf");
  EXPECT_EQ(calls, 1);
}

TEST(Transfer, UnregisterFallsBackWithIdenticalResult) {
  TransferRegistry registry;
  Collection src(layoutkit::testing::fuzz_schema(), layoutkit::testing::fuzz_arena_spec());
  layoutkit::testing::Rng rng(13);
  layoutkit::testing::fill_random(src, 9, rng);

  Collection a(src.schema(), layoutkit::testing::fuzz_arena_spec());
  EXPECT_EQ(copy_collection(a, src, {}, registry).specification, "arena_block");
  EXPECT_TRUE(registry.unregister_spec("arena_block"));
  EXPECT_FALSE(registry.unregister_spec("arena_block"));
  Collection b(src.schema(), layoutkit::testing::fuzz_arena_spec());
  EXPECT_EQ(copy_collection(b, src, {}, registry).specification, "per_leaf");
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a.dump(), src.dump());

  EXPECT_TRUE(registry.unregister_spec("per_leaf"));
  Collection c(src.schema());
  EXPECT_THROW(copy_collection(c, src, {}, registry), TransferError);
}

TEST(Transfer, MoveClearsSource) {
  Collection src = random_source(17, 7);
  const std::string expected = src.dump();
  Collection dst(src.schema(), LayoutSpec::aos(), ContextInfo::mockdev());
  move_collection(dst, src);
  EXPECT_EQ(src.size(), 0u);
  src.check_invariants();
  EXPECT_EQ(host_dump(dst), expected);
}

TEST(Transfer, MigrationInPlaceKeepsContents) {
  for (const auto& spec : specs()) {
    Collection c(layoutkit::testing::fuzz_schema(), spec);
    layoutkit::testing::Rng rng(30);
    layoutkit::testing::fill_random(c, 11, rng);
    const std::string expected = c.dump();
    c.update_memory_context_info(ContextInfo::mockdev());
    EXPECT_THROW(c.dump(), AccessFault);
    c.update_memory_context_info(ContextInfo::host());
    EXPECT_EQ(c.dump(), expected);
  }
}
