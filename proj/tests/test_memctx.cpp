#include <gtest/gtest.h>

#include <numeric>

#include "layoutkit/memctx.hpp"
#include "support/oracle.hpp"

using namespace layoutkit;

namespace {

class MockdevCapacity {
 public:
  explicit MockdevCapacity(std::size_t bytes) : saved_(memory().mockdev().capacity()) {
    memory().mockdev().set_capacity(bytes);
  }
  ~MockdevCapacity() { memory().mockdev().set_capacity(saved_); }

 private:
  std::size_t saved_;
};

}  // namespace

TEST(MemoryContext, HostAllocation) {
  const auto before = memory().allocation_stats(kHostContext);
  const Buffer b = memory().allocate(ContextInfo::host(), 1024);
  EXPECT_TRUE(b.valid());
  EXPECT_TRUE(memory().is_live(b));
  EXPECT_EQ(b.length_bytes(), 1024u);
  EXPECT_EQ(memory().allocation_stats(kHostContext).live_allocations, before.live_allocations + 1);
  memory().deallocate(b);
  EXPECT_FALSE(memory().is_live(b));
  EXPECT_EQ(memory().allocation_stats(kHostContext).live_allocations, before.live_allocations);
  EXPECT_EQ(memory().allocation_stats(kHostContext).live_bytes, before.live_bytes);
}

TEST(MemoryContext, ZeroLengthMockdevBuffer) {
  const Buffer b = memory().allocate(ContextInfo::mockdev(0), 0);
  EXPECT_TRUE(b.valid());
  EXPECT_EQ(b.length_bytes(), 0u);
  memory().deallocate(b);
}

TEST(MemoryContext, MockdevCapacityExhaustion) {
  MockdevCapacity cap(1u << 20);
  EXPECT_THROW(memory().allocate(ContextInfo::mockdev(0), 2u << 20), OutOfMemoryError);
  const Buffer ok = memory().allocate(ContextInfo::mockdev(0), 512u << 10);
  EXPECT_EQ(memory().mockdev().used(0), 512u << 10);
  memory().deallocate(ok);
  EXPECT_EQ(memory().mockdev().used(0), 0u);
}

TEST(MemoryContext, ParameterValidation) {
  ContextInfo bad_host;
  bad_host.params["device_id"] = 0;
  EXPECT_THROW(memory().allocate(bad_host, 8), ContextError);
  EXPECT_THROW(memory().allocate(ContextInfo::mockdev(MockDeviceContext::kDeviceCount), 8), ContextError);
  ContextInfo unknown;
  unknown.context = "nowhere";
  EXPECT_THROW(memory().allocate(unknown, 8), ContextError);
  EXPECT_THROW(memory().allocate(ContextInfo::host(), 8, 3), ContextError);
}

TEST(MemoryContext, DoubleFreeFaults) {
  const Buffer b = memory().allocate(ContextInfo::host(), 64);
  memory().deallocate(b);
  EXPECT_THROW(memory().deallocate(b), ContextError);
  EXPECT_THROW(memory().deallocate(Buffer{}), ContextError);
}

TEST(MemoryContext, ReallocateAfterFreeBalances) {
  const auto before = memory().allocation_stats(kHostContext);
  for (int i = 0; i < 100; ++i) memory().deallocate(memory().allocate(ContextInfo::host(), 4096));
  const auto after = memory().allocation_stats(kHostContext);
  EXPECT_EQ(after.live_allocations, before.live_allocations);
  EXPECT_EQ(after.live_bytes, before.live_bytes);
  EXPECT_EQ(after.total_allocations - before.total_allocations, 100u);
  EXPECT_EQ(after.total_deallocations - before.total_deallocations, 100u);
}

TEST(MemoryContext, Alignment) {
  for (std::size_t a : {std::size_t{16}, std::size_t{64}, std::size_t{4096}}) {
    const Buffer b = memory().allocate(ContextInfo::host(), 100, a);
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(memory().data(b, AccessMode::Read)) % a, 0u) << a;
    memory().deallocate(b);
  }
}

TEST(MemoryContext, Memset) {
  const std::size_t len = 32;
  const Buffer b = memory().allocate(ContextInfo::host(), len);
  auto* p = reinterpret_cast<std::uint8_t*>(memory().data(b, AccessMode::Write));
  std::iota(p, p + len, std::uint8_t{1});
  memory().memset(b, 0, 0, len);
  EXPECT_TRUE(std::all_of(p, p + len, [](std::uint8_t v) { return v == 0; }));
  memory().memset(b, 0xFF, 4, 0);
  EXPECT_EQ(p[4], 0);
  EXPECT_THROW(memory().memset(b, 7, len - 1, 2), RangeError);
  EXPECT_EQ(p[len - 1], 0);
  memory().deallocate(b);
}

TEST(MemoryContext, HostMockdevRoundTrip) {
  const std::size_t len = 1000;
  const Buffer h = memory().allocate(ContextInfo::host(), len);
  const Buffer d = memory().allocate(ContextInfo::mockdev(1), len);
  const Buffer back = memory().allocate(ContextInfo::host(), len);
  auto* p = reinterpret_cast<std::uint8_t*>(memory().data(h, AccessMode::Write));
  for (std::size_t i = 0; i < len; ++i) p[i] = static_cast<std::uint8_t>(i * 7 + 3);
  const auto stats = memory().copy_stats();
  memory().memcopy_with_context(d, 0, h, 0, len);
  memory().memcopy_with_context(back, 0, d, 0, len);
  const auto after = memory().copy_stats();
  EXPECT_EQ(after.cross_context_operations - stats.cross_context_operations, 2u);
  EXPECT_EQ(after.cross_context_bytes - stats.cross_context_bytes, 2 * len);
  const auto* q = reinterpret_cast<const std::uint8_t*>(memory().data(back, AccessMode::Read));
  EXPECT_TRUE(std::equal(p, p + len, q));
  for (const Buffer& b : {h, d, back}) memory().deallocate(b);
}

TEST(MemoryContext, CopyOfZeroBytesIsNoop) {
  const Buffer a = memory().allocate(ContextInfo::host(), 4);
  const Buffer b = memory().allocate(ContextInfo::mockdev(), 0);
  EXPECT_NO_THROW(memory().memcopy_with_context(b, 0, a, 4, 0));
  EXPECT_NO_THROW(memory().memcopy_with_context(a, 0, b, 0, 0));
  memory().deallocate(a);
  memory().deallocate(b);
}

TEST(MemoryContext, OverlapShiftRightByOne) {
  const std::size_t n = 16;
  const Buffer b = memory().allocate(ContextInfo::host(), n);
  auto* p = reinterpret_cast<std::uint8_t*>(memory().data(b, AccessMode::Write));
  std::iota(p, p + n, std::uint8_t{0});
  std::vector<std::uint8_t> expected(p, p + n);
  const std::vector<std::uint8_t> tmp(expected.begin(), expected.end() - 1);
  std::copy(tmp.begin(), tmp.end(), expected.begin() + 1);
  memory().memcopy_with_context(b, 1, b, 0, n - 1);
  EXPECT_TRUE(std::equal(p, p + n, expected.begin()));
  memory().deallocate(b);
}

TEST(MemoryContext, OverlapOracleSmall) {
  const auto out = layoutkit::testing::run_overlap_oracle(ContextInfo::host(), 16);
  EXPECT_GT(out.cases, 0u);
  EXPECT_EQ(out.mismatches, 0u) << out.first_mismatch;
}

TEST(MemoryContext, HostAccessToMockdevFaults) {
  const Buffer d = memory().allocate(ContextInfo::mockdev(), 16);
  EXPECT_THROW(memory().data(d, AccessMode::Read), AccessFault);
  EXPECT_THROW(memory().data(d, AccessMode::Write), AccessFault);
  {
    ExecutionScope device(ExecutionContext::MockDevice);
    EXPECT_NO_THROW(memory().data(d, AccessMode::Write));
    const Buffer h = memory().allocate(ContextInfo::host(), 16);
    EXPECT_THROW(memory().data(h, AccessMode::Read), AccessFault);
    memory().deallocate(h);
  }
  memory().deallocate(d);
}

TEST(MemoryContext, MigrationRetagsStreamChangeInPlace) {
  const Buffer d = memory().allocate(ContextInfo::mockdev(0, 0), 64);
  const auto moved = memory().update_memory_context_info({d}, ContextInfo::mockdev(0, 3));
  ASSERT_EQ(moved.size(), 1u);
  EXPECT_EQ(moved[0].handle(), d.handle());
  EXPECT_EQ(moved[0].info().param("stream"), 3);
  memory().deallocate(moved[0]);
}

TEST(MemoryContext, MigrationFailureLeavesSourceIntact) {
  const Buffer a = memory().allocate(ContextInfo::host(), 64);
  const Buffer b = memory().allocate(ContextInfo::host(), 64);
  auto* p = reinterpret_cast<std::uint8_t*>(memory().data(a, AccessMode::Write));
  std::iota(p, p + 64, std::uint8_t{5});
  memory().fail_allocation_after(kMockDeviceContext, 1);
  EXPECT_THROW(memory().update_memory_context_info({a, b}, ContextInfo::mockdev()), OutOfMemoryError);
  EXPECT_TRUE(memory().is_live(a));
  EXPECT_TRUE(memory().is_live(b));
  EXPECT_EQ(p[10], 15);
  const auto moved = memory().update_memory_context_info({a, b}, ContextInfo::mockdev());
  EXPECT_FALSE(memory().is_live(a));
  {
    ExecutionScope device(ExecutionContext::MockDevice);
    EXPECT_EQ(reinterpret_cast<const std::uint8_t*>(memory().data(moved[0], AccessMode::Read))[10], 15);
  }
  for (const Buffer& m : moved) memory().deallocate(m);
}

TEST(MemoryContext, ByteSizeParsing) {
  EXPECT_EQ(parse_byte_size("1048576"), 1048576u);
  EXPECT_EQ(parse_byte_size("64M"), 64u << 20);
  EXPECT_EQ(parse_byte_size("2G"), 2ull << 30);
  EXPECT_EQ(parse_byte_size("4k"), 4096u);
  EXPECT_THROW(parse_byte_size("12Q"), ContextError);
  EXPECT_THROW(parse_byte_size(""), ContextError);
}
