#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "mesh/errors.h"
#include "mesh/runtime.h"

namespace mesh {
namespace {

class RuntimeTest : public ::testing::Test {
 protected:
  explicit RuntimeTest(RuntimeOptions options = {}) : runtime_(memory_, options) {}

  TaggedPointer alloc(uint64_t size) {
    AllocResult r = runtime_.malloc(size);
    EXPECT_TRUE(r.ok());
    EXPECT_FALSE(r.pointer.is_null());
    return r.pointer;
  }

  std::optional<ViolationKind> check(TaggedPointer p, uint64_t size) {
    auto v = runtime_.safety_check(p, size);
    return v ? std::optional(v->kind) : std::nullopt;
  }

  AddressSpace memory_;
  Runtime runtime_;
};

TEST_F(RuntimeTest, FirstAllocationUsesHighestRow) {
  TaggedPointer p = alloc(16);
  const SplitPointer s = split(p, runtime_.tags());
  EXPECT_EQ(s.tag, 131071u);
  EXPECT_EQ(s.address, MemoryLayout::kSafeHeapBase);
  EXPECT_EQ(runtime_.row(s.tag), (TableRow{s.address, s.address + 16}));
  EXPECT_EQ(tag_of(alloc(16), runtime_.tags()), 131070u);
}

TEST_F(RuntimeTest, TableRowsStartInvalid) {
  for (uint64_t t : {0ull, 1ull, 500ull, 131071ull}) EXPECT_FALSE(runtime_.row(t).valid());
  EXPECT_EQ(runtime_.table_bytes(), 2'097'152u);
  EXPECT_EQ(runtime_.stats().table_bytes, 2'097'152u);
}

TEST_F(RuntimeTest, ByteExactBounds) {
  TaggedPointer p = alloc(16);
  EXPECT_EQ(check(p, 16), std::nullopt);
  EXPECT_EQ(check(ptr_add(p, 15), 1), std::nullopt);
  EXPECT_EQ(check(ptr_add(p, 16), 1), ViolationKind::BufferOverflow);
  EXPECT_EQ(check(ptr_add(p, 8), 8), std::nullopt);
  EXPECT_EQ(check(ptr_add(p, 9), 8), ViolationKind::BufferOverflow);
  EXPECT_EQ(check(ptr_add(p, -1), 1), ViolationKind::BufferUnderflow);
  EXPECT_EQ(check(p, 17), ViolationKind::BufferOverflow);
}

TEST_F(RuntimeTest, UseAfterFreeAndDoubleFree) {
  TaggedPointer p = alloc(32);
  EXPECT_EQ(runtime_.free(p), std::nullopt);
  EXPECT_FALSE(runtime_.row(tag_of(p, runtime_.tags())).valid());
  EXPECT_EQ(check(p, 1), ViolationKind::UseAfterFree);
  EXPECT_EQ(check(ptr_add(p, 100), 1), ViolationKind::UseAfterFree);
  auto v = runtime_.free(p);
  ASSERT_TRUE(v);
  EXPECT_EQ(v->kind, ViolationKind::DoubleFree);
}

TEST_F(RuntimeTest, UntaggedPointers) {
  alloc(16);
  EXPECT_EQ(check(TaggedPointer{MemoryLayout::kSafeHeapBase}, 8),
            ViolationKind::IllegalSafeHeapAccess);
  EXPECT_EQ(check(TaggedPointer{0}, 8), ViolationKind::IllegalSafeHeapAccess);
  EXPECT_EQ(check(TaggedPointer{MemoryLayout::kNormalHeapBase}, 8), std::nullopt);
  EXPECT_EQ(check(TaggedPointer{MemoryLayout::kGlobalsBase}, 8), std::nullopt);

  auto f = runtime_.free(TaggedPointer{MemoryLayout::kSafeHeapBase});
  ASSERT_TRUE(f);
  EXPECT_EQ(f->kind, ViolationKind::IllegalSafeHeapFree);
  auto null_free = runtime_.free(TaggedPointer{});
  ASSERT_TRUE(null_free);
  EXPECT_EQ(null_free->kind, ViolationKind::IllegalSafeHeapFree);
}

TEST_F(RuntimeTest, SeparatedChecksAgreeWithCombined) {
  TaggedPointer p = alloc(24);
  TaggedPointer dead = alloc(8);
  runtime_.free(dead);
  EXPECT_EQ(runtime_.temporal_check(p), std::nullopt);
  EXPECT_TRUE(runtime_.temporal_check(dead));
  EXPECT_EQ(runtime_.spatial_check(ptr_add(p, 20), 4), std::nullopt);
  auto v = runtime_.spatial_check(ptr_add(p, 21), 4);
  ASSERT_TRUE(v);
  EXPECT_EQ(v->kind, ViolationKind::BufferOverflow);
}

TEST_F(RuntimeTest, ArgumentCheckAllowsOnePastEnd) {
  TaggedPointer p = alloc(16);
  EXPECT_EQ(runtime_.argument_check(ptr_add(p, 16)), std::nullopt);
  EXPECT_TRUE(runtime_.argument_check(ptr_add(p, 17)));
  EXPECT_EQ(runtime_.argument_check(TaggedPointer{42}), std::nullopt);
  runtime_.free(p);
  auto v = runtime_.argument_check(p);
  ASSERT_TRUE(v);
  EXPECT_EQ(v->kind, ViolationKind::UseAfterFree);
}

TEST_F(RuntimeTest, ClassifyViolation) {
  EXPECT_EQ(Runtime::classify_violation(TableRow{}, 0x1000), ViolationKind::UseAfterFree);
  EXPECT_EQ(Runtime::classify_violation(TableRow{0x2000, 0x2010}, 0x1000),
            ViolationKind::BufferUnderflow);
}

TEST_F(RuntimeTest, CallocZeroFillsAndRejectsOverflow) {
  TaggedPointer p = alloc(64);
  memory_.fill(strip(p, runtime_.tags()), 64, 0xEE);
  runtime_.free(p);
  AllocResult c = runtime_.calloc(8, 8);
  ASSERT_TRUE(c.ok());
  const uint64_t a = strip(c.pointer, runtime_.tags());
  EXPECT_EQ(a, strip(p, runtime_.tags()));
  for (uint64_t i = 0; i < 64; i += 8) EXPECT_EQ(memory_.read_word(a + i, 8), 0u);
  AllocResult big = runtime_.calloc(uint64_t{1} << 40, uint64_t{1} << 40);
  EXPECT_TRUE(big.ok());
  EXPECT_TRUE(big.pointer.is_null());
}

TEST_F(RuntimeTest, ReallocPreservesPrefixAndRetiresOldTag) {
  TaggedPointer p = alloc(16);
  const uint64_t a = strip(p, runtime_.tags());
  memory_.write_word(a, 8, 0x1122334455667788ull);
  AllocResult r = runtime_.realloc(p, 200);
  ASSERT_TRUE(r.ok());
  EXPECT_NE(tag_of(r.pointer, runtime_.tags()), tag_of(p, runtime_.tags()));
  EXPECT_EQ(memory_.read_word(strip(r.pointer, runtime_.tags()), 8), 0x1122334455667788ull);
  EXPECT_EQ(check(p, 1), ViolationKind::UseAfterFree);
  EXPECT_EQ(check(ptr_add(r.pointer, 199), 1), std::nullopt);

  AllocResult again = runtime_.realloc(p, 8);
  ASSERT_FALSE(again.ok());
  EXPECT_EQ(again.violation->kind, ViolationKind::DoubleFree);

  AllocResult from_null = runtime_.realloc(TaggedPointer{}, 8);
  ASSERT_TRUE(from_null.ok());
  EXPECT_NE(tag_of(from_null.pointer, runtime_.tags()), 0u);
}

TEST_F(RuntimeTest, ReallocOfNormalHeapPointerStaysThere) {
  auto nh = runtime_.nh_alloc(16);
  ASSERT_TRUE(nh);
  memory_.write_word(*nh, 8, 77);
  AllocResult r = runtime_.realloc(TaggedPointer{*nh}, 64);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(tag_of(r.pointer, runtime_.tags()), 0u);
  EXPECT_EQ(memory_.locate(r.pointer.raw()), RegionKind::NormalHeap);
  EXPECT_EQ(memory_.read_word(r.pointer.raw(), 8), 77u);
}

TEST_F(RuntimeTest, MemalignAligns) {
  AllocResult r = runtime_.memalign(4096, 10);
  ASSERT_TRUE(r.ok());
  const uint64_t a = strip(r.pointer, runtime_.tags());
  EXPECT_EQ(a % 4096, 0u);
  EXPECT_EQ(runtime_.row(tag_of(r.pointer, runtime_.tags())), (TableRow{a, a + 10}));
  EXPECT_TRUE(runtime_.memalign(48, 10).pointer.is_null());
}

TEST_F(RuntimeTest, NormalHeapAllocationsAreUntagged) {
  auto a = runtime_.nh_alloc(100);
  ASSERT_TRUE(a);
  EXPECT_EQ(tag_of(TaggedPointer{*a}, runtime_.tags()), 0u);
  EXPECT_EQ(check(TaggedPointer{*a}, 8), std::nullopt);
  EXPECT_EQ(runtime_.free(TaggedPointer{*a}), std::nullopt);
  EXPECT_THROW(runtime_.free(TaggedPointer{*a}), MemoryFault);
  EXPECT_EQ(runtime_.stats().total_allocations, 0u);
}

TEST_F(RuntimeTest, SafeHeapExhaustionIsNullNotViolation) {
  AllocResult r = runtime_.malloc(uint64_t{1} << 30);
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(r.pointer.is_null());
  // The row was handed back.
  EXPECT_EQ(runtime_.next_index(), 131071u);
}

TEST_F(RuntimeTest, StatsTrackPeak) {
  std::vector<TaggedPointer> ps;
  for (int i = 0; i < 10; ++i) ps.push_back(alloc(8));
  for (int i = 0; i < 5; ++i) runtime_.free(ps[i]);
  alloc(8);
  RuntimeStats s = runtime_.stats();
  EXPECT_EQ(s.total_allocations, 11u);
  EXPECT_EQ(s.peak_live_objects, 10u);
  EXPECT_EQ(s.current_live, 6u);
}

class SmallTableTest : public RuntimeTest {
 protected:
  SmallTableTest() : RuntimeTest(RuntimeOptions{TagConfig(4), false}) {}
};

TEST_F(SmallTableTest, SixteenthAllocationExhausts) {
  std::set<uint64_t> tags;
  for (int i = 0; i < 15; ++i) tags.insert(tag_of(alloc(8), runtime_.tags()));
  EXPECT_EQ(tags.size(), 15u);
  EXPECT_EQ(*tags.begin(), 1u);
  EXPECT_EQ(*tags.rbegin(), 15u);
  AllocResult r = runtime_.malloc(8);
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.violation->kind, ViolationKind::MetadataExhaustion);
}

TEST_F(SmallTableTest, FreedRowsAreNotReusedWithoutWrap) {
  for (int i = 0; i < 15; ++i) runtime_.free(alloc(8));
  AllocResult r = runtime_.malloc(8);
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.violation->kind, ViolationKind::MetadataExhaustion);
  EXPECT_EQ(runtime_.stats().current_live, 0u);
}

TEST_F(SmallTableTest, ExhaustionLeaksNoSafeHeapBlock) {
  for (int i = 0; i < 15; ++i) alloc(8);
  const size_t blocks = runtime_.safe_heap().live_blocks();
  EXPECT_FALSE(runtime_.malloc(8).ok());
  EXPECT_EQ(runtime_.safe_heap().live_blocks(), blocks);
}

class WrapTest : public RuntimeTest {
 protected:
  WrapTest() : RuntimeTest(RuntimeOptions{TagConfig(4), true}) {}
};

TEST_F(WrapTest, ReusesTheOnlyFreedRow) {
  std::vector<TaggedPointer> ps;
  for (int i = 0; i < 15; ++i) ps.push_back(alloc(8));
  TaggedPointer nine;
  for (TaggedPointer p : ps) {
    if (tag_of(p, runtime_.tags()) == 9) nine = p;
  }
  ASSERT_FALSE(nine.is_null());
  runtime_.free(nine);
  TaggedPointer again = alloc(8);
  EXPECT_EQ(tag_of(again, runtime_.tags()), 9u);
  EXPECT_EQ(runtime_.stats().wraparound_reuses, 1u);
  AllocResult full = runtime_.malloc(8);
  ASSERT_FALSE(full.ok());
  EXPECT_EQ(full.violation->kind, ViolationKind::MetadataExhaustion);
}

TEST_F(WrapTest, LongAllocFreeCycle) {
  for (int i = 0; i < 10000; ++i) {
    TaggedPointer p = alloc(32);
    ASSERT_EQ(check(ptr_add(p, 31), 1), std::nullopt);
    ASSERT_EQ(runtime_.free(p), std::nullopt);
  }
  EXPECT_EQ(runtime_.stats().wraparound_reuses, 10000u - 15u);
  EXPECT_EQ(runtime_.stats().total_allocations, 10000u);
}

TEST_F(WrapTest, StaleTagCanPassAfterReuse) {
  TaggedPointer old = alloc(32);
  alloc(32);  // keeps the freed block from merging with the free tail
  const uint64_t tag = tag_of(old, runtime_.tags());
  runtime_.free(old);
  for (int i = 0; i < 13; ++i) alloc(64);
  TaggedPointer fresh = alloc(32);
  ASSERT_EQ(tag_of(fresh, runtime_.tags()), tag);
  ASSERT_EQ(strip(fresh, runtime_.tags()), strip(old, runtime_.tags()));
  EXPECT_EQ(check(old, 8), std::nullopt);
}

TEST_F(WrapTest, ScanSkipsRowZero) {
  std::vector<TaggedPointer> ps;
  for (int i = 0; i < 15; ++i) ps.push_back(alloc(8));
  EXPECT_EQ(runtime_.wraparound_find_free(), std::nullopt);
  runtime_.free(ps.back());  // tag 1
  EXPECT_EQ(runtime_.wraparound_find_free(), 1u);
}

TEST(RuntimeConcurrency, ParallelAllocationsGetDistinctTags) {
  AddressSpace memory;
  Runtime runtime(memory);
  constexpr int kThreads = 4;
  constexpr int kPerThread = 500;
  std::vector<std::vector<TaggedPointer>> got(kThreads);
  std::vector<std::thread> workers;
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < kPerThread; ++i) {
        TaggedPointer p = runtime.malloc(16 + i % 32).pointer;
        got[t].push_back(p);
        if (runtime.safety_check(p, 16)) got[t].push_back(TaggedPointer{});
        if (i % 3 == 0) runtime.free(p);
      }
    });
  }
  for (auto& w : workers) w.join();
  std::set<uint64_t> tags;
  for (const auto& v : got) {
    for (TaggedPointer p : v) {
      ASSERT_FALSE(p.is_null());
      tags.insert(tag_of(p, runtime.tags()));
    }
  }
  EXPECT_EQ(tags.size(), size_t{kThreads * kPerThread});
  EXPECT_EQ(tags.count(0), 0u);
}

}  // namespace
}  // namespace mesh
