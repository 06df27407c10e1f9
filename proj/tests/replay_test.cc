#include <gtest/gtest.h>

#include "mesh/replay.h"
#include "test_support.h"

namespace mesh {
namespace {

TEST(TraceParser, ParsesAllRecordKinds) {
  Trace t = parse_trace("# header\nA 1 16\nC 1 -4 8   # trailing\n\nF 1\n");
  ASSERT_EQ(t.records.size(), 3u);
  EXPECT_EQ(t.records[0].kind, TraceRecord::Kind::Alloc);
  EXPECT_EQ(t.records[0].size, 16u);
  EXPECT_EQ(t.records[1].kind, TraceRecord::Kind::Check);
  EXPECT_EQ(t.records[1].offset, -4);
  EXPECT_EQ(t.records[1].line, 3);
  EXPECT_EQ(t.records[2].kind, TraceRecord::Kind::Free);
  EXPECT_EQ(print_trace(t), "A 1 16\nC 1 -4 8\nF 1\n");
  EXPECT_EQ(print_trace(parse_trace(print_trace(t))), print_trace(t));
}

TEST(TraceParser, RejectsMalformedLines) {
  EXPECT_THROW(parse_trace("A 1\n"), TraceError);
  EXPECT_THROW(parse_trace("A x 16\n"), TraceError);
  EXPECT_THROW(parse_trace("Q 1 2\n"), TraceError);
  EXPECT_THROW(parse_trace("F 3\n"), TraceError);
  EXPECT_THROW(parse_trace("A 1 16\nC 1 0\n"), TraceError);
  try {
    parse_trace("A 1 16\n\nF 2\n");
    FAIL();
  } catch (const TraceError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(Replay, SingleAllocation) {
  ReplayReport r = replay(parse_trace("A 1 100\n"), {});
  EXPECT_EQ(r.stats.total_allocations, 1u);
  EXPECT_EQ(r.stats.peak_live_objects, 1u);
  EXPECT_EQ(r.stats.table_bytes, 2'097'152u);
}

TEST(Replay, CountsViolationsByKind) {
  ReplayReport r = replay(parse_trace("A 1 16\nC 1 0 16\nC 1 16 1\nC 1 -1 1\nF 1\nC 1 0 1\nF 1\n"), {});
  EXPECT_EQ(r.checks, 4u);
  EXPECT_EQ(r.violation_count(ViolationKind::BufferOverflow), 1u);
  EXPECT_EQ(r.violation_count(ViolationKind::BufferUnderflow), 1u);
  EXPECT_EQ(r.violation_count(ViolationKind::UseAfterFree), 1u);
  EXPECT_EQ(r.violation_count(ViolationKind::DoubleFree), 1u);
}

TEST(Replay, ExhaustionAndWrapAtFourBits) {
  std::string text;
  for (int i = 0; i < 20; ++i) {
    text += "A " + std::to_string(i) + " 8\nF " + std::to_string(i) + "\n";
  }
  ReplayConfig config;
  config.tags = TagConfig(4);
  ReplayReport no_wrap = replay(parse_trace(text), config);
  EXPECT_EQ(no_wrap.stats.total_allocations, 15u);
  EXPECT_EQ(no_wrap.violation_count(ViolationKind::MetadataExhaustion), 5u);
  config.wrap = true;
  ReplayReport wrap = replay(parse_trace(text), config);
  EXPECT_EQ(wrap.stats.total_allocations, 20u);
  EXPECT_EQ(wrap.stats.wraparound_reuses, 5u);
  EXPECT_EQ(wrap.violation_count(ViolationKind::MetadataExhaustion), 0u);
}

TEST(Replay, ShippedTraceUtilization) {
  ReplayReport r = replay(parse_trace(mesh::read_file(mesh::testing::trace_dir() / "nginx_like.trace")), {});
  EXPECT_EQ(r.stats.total_allocations, 5211u);
  EXPECT_EQ(r.stats.peak_live_objects, 151u);
  EXPECT_NEAR(r.utilization(), 151.0 / 131071.0, 1e-12);
  const std::string text = format_replay(r);
  EXPECT_NE(text.find("utilization=0.115%\n"), std::string::npos) << text;
  for (uint64_t v : r.violations) EXPECT_EQ(v, 0u);
}

TEST(Replay, ThreadedReplayGivesDistinctTags) {
  std::string text;
  for (int i = 0; i < 4000; ++i) text += "A " + std::to_string(i) + " 24\nC " + std::to_string(i) + " 0 8\n";
  ReplayConfig config;
  config.threads = 4;
  ReplayReport r = replay(parse_trace(text), config);
  EXPECT_EQ(r.tags.size(), 4000u);
  EXPECT_EQ(r.distinct_tags, 4000u);
  EXPECT_EQ(r.checks, 4000u);
  for (uint64_t v : r.violations) EXPECT_EQ(v, 0u);
}

}  // namespace
}  // namespace mesh
