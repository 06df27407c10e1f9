#include <gtest/gtest.h>

#include "mesh/interp.h"
#include "random_program.h"
#include "test_support.h"

namespace mesh {
namespace {

ExecutionReport run_text(const std::string& text, RunConfig config = {},
                         InstrumentOptions options = {}) {
  return run(mir::parse(text), config, options);
}

TEST(Interpreter, ArithmeticAndControlFlow) {
  const char* text = R"(fn fact(%n) {
entry:
  %one = const 1
  %small = icmp ule %n, %one
  cbr %small, base, rec
base:
  ret %one
rec:
  %m = sub %n, %one
  %r = call fact(%m)
  %p = mul %n, %r
  ret %p
}
fn main() {
entry:
  %ten = const 10
  %f = call fact(%ten)
  print %f
  %neg = const -3
  %zero = const 0
  %lt = icmp slt %neg, %zero
  %ult = icmp ult %neg, %zero
  print %lt
  print %ult
  ret %f
}
)";
  ExecutionReport r = run_text(text);
  EXPECT_EQ(r.exit, ExitKind::Normal);
  EXPECT_EQ(r.outputs, (std::vector<uint64_t>{3628800, 1, 0}));
  EXPECT_EQ(r.return_value, 3628800u);
}

TEST(Interpreter, LoadsZeroExtendAndStoresTruncate) {
  const char* text = R"(fn main() {
entry:
  %a = alloca 8
  %big = const 0x1234567890
  store i64 %big, %a
  %b = load i8 %a
  %h = load i16 %a
  %w = load i32 %a
  print %b
  print %h
  print %w
  %m = const -1
  store i16 %m, %a
  %x = load i64 %a
  print %x
  ret
}
)";
  ExecutionReport r = run_text(text);
  EXPECT_EQ(r.outputs,
            (std::vector<uint64_t>{0x90, 0x7890, 0x34567890, 0x123456FFFFull}));
}

TEST(Interpreter, PhisAreEvaluatedTogether) {
  const char* text = R"(fn main() {
entry:
  %a = const 1
  %b = const 2
  %zero = const 0
  %two = const 2
  %one = const 1
  br loop
loop:
  %x = phi [entry, %a], [loop, %y]
  %y = phi [entry, %b], [loop, %x]
  %i = phi [entry, %zero], [loop, %i1]
  %i1 = add %i, %one
  %more = icmp ult %i1, %two
  cbr %more, loop, done
done:
  print %x
  print %y
  ret
}
)";
  ExecutionReport r = run_text(text);
  EXPECT_EQ(r.outputs, (std::vector<uint64_t>{2, 1}));
}

TEST(Interpreter, FramesAreReleasedOnReturn) {
  const char* text = R"(fn leaf() {
entry:
  %a = alloca 1024
  %v = load i64 %a
  ret %a
}
fn main() {
entry:
  %p = call leaf()
  %q = call leaf()
  %same = icmp eq %p, %q
  print %same
  ret
}
)";
  EXPECT_EQ(run_text(text).outputs, (std::vector<uint64_t>{1}));
}

TEST(Interpreter, StepLimitStopsInfiniteLoop) {
  const char* text = "fn main() {\nentry:\n  br entry\n}\n";
  RunConfig config;
  config.step_limit = 1000;
  ExecutionReport r = run_text(text, config);
  EXPECT_EQ(r.exit, ExitKind::Fault);
  EXPECT_NE(r.fault_message.find("step limit"), std::string::npos);
  EXPECT_EQ(run_uninstrumented(mir::parse(text), config).exit, ExitKind::Fault);
}

TEST(Interpreter, UnmappedAccessIsAFault) {
  ExecutionReport r =
      run_text("fn main() {\nentry:\n  %a = const 0x9000000000\n  %v = load i8 %a\n  ret\n}\n");
  EXPECT_EQ(r.exit, ExitKind::Fault);
  EXPECT_TRUE(r.violations.empty());
}

TEST(Interpreter, MissingMainIsRejected) {
  EXPECT_THROW(execute(mir::parse("fn other() {\nentry:\n  ret\n}\n"), {}), mir::ParseError);
}

TEST(Interpreter, ViolationCarriesSourceIndex) {
  ExecutionReport r = run_text(
      "fn main() {\nentry:\n  %n = const 4\n  %p = call malloc(%n)\n  %q = ptradd %p, 4\n"
      "  %v = load i8 %q\n  ret\n}\n");
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].violation.kind, ViolationKind::BufferOverflow);
  EXPECT_EQ(r.violations[0].instr_index, 3);
  EXPECT_EQ(r.violations[0].function, "main");
  EXPECT_EQ(r.exit, ExitKind::AbortedOnViolation);
}

TEST(Interpreter, ContinuesPastViolationsWhenAsked) {
  RunConfig config;
  config.abort_on_violation = false;
  ExecutionReport r = run_text(
      "fn main() {\nentry:\n  %n = const 4\n  %p = call malloc(%n)\n  %q = ptradd %p, 4\n"
      "  %v = load i8 %q\n  call free(%p)\n  %w = load i8 %p\n  print %w\n  ret\n}\n",
      config);
  ASSERT_EQ(r.violations.size(), 2u);
  EXPECT_EQ(r.violations[1].violation.kind, ViolationKind::UseAfterFree);
  EXPECT_EQ(r.exit, ExitKind::Normal);
  EXPECT_EQ(r.outputs.size(), 1u);
}

TEST(Interpreter, UninstrumentedRunMissesBugsButOracleSeesThem) {
  const std::string text = mesh::read_file(mesh::testing::corpus_dir() / "use_after_free.mir");
  RunConfig config;
  config.oracle = true;
  ExecutionReport r = run_uninstrumented(mir::parse(text), config);
  EXPECT_EQ(r.exit, ExitKind::Normal);
  EXPECT_TRUE(r.violations.empty());
  ASSERT_EQ(r.oracle_findings.size(), 1u);
  EXPECT_EQ(r.oracle_findings[0].kind, ViolationKind::UseAfterFree);
  EXPECT_EQ(r.oracle_findings[0].instr_index, 7);
  EXPECT_FALSE(r.instrument_stats);
}

TEST(Interpreter, ExternAllocatedPointerPassesChecks) {
  const std::string text = mesh::read_file(mesh::testing::corpus_dir() / "normal_heap_pointer.mir");
  ExecutionReport r = run_text(text);
  EXPECT_EQ(r.exit, ExitKind::Normal);
  EXPECT_TRUE(r.violations.empty());
  EXPECT_GT(r.runtime_stats.checks_executed, 0u);
}

TEST(Interpreter, ReportsAreDeterministic) {
  for (const auto& f : mesh::testing::corpus_programs()) {
    SCOPED_TRACE(f.filename().string());
    const auto program = mir::parse(mesh::read_file(f));
    RunConfig config;
    config.oracle = true;
    config.tags = TagConfig(4);
    config.wrap = true;
    const std::string a = format_structured(run(program, config));
    const std::string b = format_structured(run(program, config));
    EXPECT_EQ(a, b);
    EXPECT_EQ(format_report(run(program, config)), format_report(run(program, config)));
  }
}

TEST(Interpreter, StructuredReportGroupsViolations) {
  RunConfig config;
  config.abort_on_violation = false;
  ExecutionReport r = run_text(mesh::read_file(mesh::testing::corpus_dir() / "double_free.mir"), config);
  const std::string s = format_structured(r);
  EXPECT_NE(s.find("violations=1\n"), std::string::npos);
  EXPECT_NE(s.find("violation.0.kind=DoubleFree\n"), std::string::npos);
  EXPECT_NE(s.find("violation.0.instr=5\n"), std::string::npos);
  EXPECT_NE(s.find("stats.table_bytes=2097152\n"), std::string::npos);
}

// Differential: on programs without bugs the three execution modes print
// the same values, and instrumentation leaves no tagged access unchecked.
TEST(Interpreter, RandomBugFreeProgramsMatchUninstrumented) {
  mesh::testing::RandomProgramOptions options;
  options.allow_bugs = false;
  InstrumentOptions no_opt;
  no_opt.enable_check_removal = false;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    SCOPED_TRACE(seed);
    const auto program = mir::parse(mesh::testing::random_program(seed, options));
    RunConfig config;
    config.oracle = true;
    const ExecutionReport plain = run_uninstrumented(program, config);
    const ExecutionReport opt = run(program, config);
    const ExecutionReport unopt = run(program, config, no_opt);
    ASSERT_EQ(plain.exit, ExitKind::Normal);
    ASSERT_TRUE(plain.oracle_findings.empty());
    EXPECT_EQ(opt.exit, ExitKind::Normal);
    EXPECT_TRUE(opt.violations.empty());
    EXPECT_EQ(opt.outputs, plain.outputs);
    EXPECT_EQ(unopt.outputs, plain.outputs);
    EXPECT_EQ(opt.tagged_unchecked_accesses, 0u);
    EXPECT_EQ(opt.ghost_table_mismatches, 0u);
    EXPECT_EQ(opt.oracle->unexpected, 0u);
  }
}

// With bugs and no abort, every MESH verdict matches the oracle.
TEST(Interpreter, RandomBuggyProgramsAgreeWithOracle) {
  mesh::testing::RandomProgramOptions options;
  options.allow_double_free = true;
  uint64_t violations = 0;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    SCOPED_TRACE(seed);
    const std::string text = mesh::testing::random_program(seed, options);
    RunConfig config;
    config.oracle = true;
    config.abort_on_violation = false;
    const ExecutionReport r = run(mir::parse(text), config);
    ASSERT_EQ(r.exit, ExitKind::Normal) << r.fault_message << "\n" << text;
    ASSERT_TRUE(r.oracle);
    EXPECT_EQ(r.oracle->unexpected, 0u) << format_report(r);
    EXPECT_EQ(r.oracle->agreements, r.oracle->accesses);
    ASSERT_EQ(r.violations.size(), r.oracle_findings.size());
    for (size_t i = 0; i < r.violations.size(); ++i) {
      EXPECT_EQ(r.violations[i].violation.kind, r.oracle_findings[i].kind);
      EXPECT_EQ(r.violations[i].instr_index, r.oracle_findings[i].instr_index);
    }
    violations += r.violations.size();
  }
  EXPECT_GT(violations, 100u);
}

}  // namespace
}  // namespace mesh
