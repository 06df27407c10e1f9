#include <gtest/gtest.h>

#include "mesh/instrument.h"
#include "test_support.h"

namespace mesh {
namespace {

using mir::Opcode;

std::vector<Opcode> opcodes(const mir::Function& f) {
  std::vector<Opcode> out;
  for (const auto& b : f.blocks) {
    for (const auto& in : b.instrs) out.push_back(in.op);
  }
  return out;
}

size_t count(const mir::Function& f, Opcode op) {
  auto ops = opcodes(f);
  return static_cast<size_t>(std::count(ops.begin(), ops.end(), op));
}

TEST(Instrument, HeapAccessGetsCheckAndStrip) {
  auto p = mir::parse(
      "fn main() {\nentry:\n  %n = const 8\n  %p = call malloc(%n)\n"
      "  store i32 %n, %p\n  %x = load i8 %p\n  ret\n}\n");
  InstrumentResult r = instrument_program(p);
  const auto& f = r.program.functions[0];
  EXPECT_EQ(opcodes(f), (std::vector<Opcode>{Opcode::Const, Opcode::Call, Opcode::Check,
                                             Opcode::Strip, Opcode::Store, Opcode::Check,
                                             Opcode::Strip, Opcode::Load}));
  const auto& ins = f.blocks[0].instrs;
  EXPECT_EQ(ins[1].name, "mesh.malloc");
  EXPECT_EQ(ins[2].width, 4u);
  EXPECT_EQ(ins[2].args[0], "%p");
  EXPECT_EQ(ins[4].args[1], ins[3].dest);
  EXPECT_EQ(ins[5].width, 1u);
  EXPECT_EQ(r.stats.checks_inserted, 2u);
  EXPECT_EQ(r.stats.checks_elided, 0u);
  EXPECT_TRUE(mir::validate(r.program).empty());
}

TEST(Instrument, EmittedInstructionsKeepSourceIndex) {
  auto p = mir::parse(
      "fn main() {\nentry:\n  %n = const 8\n  %p = call malloc(%n)\n  %x = load i8 %p\n  ret\n}\n");
  const InstrumentResult result = instrument_program(p);
  const auto& ins = result.program.functions[0].blocks[0].instrs;
  ASSERT_EQ(ins.size(), 5u);
  EXPECT_EQ(ins[2].src.index, 2);
  EXPECT_EQ(ins[3].src.index, 2);
  EXPECT_EQ(ins[4].src.index, 2);
}

TEST(Instrument, StackAndGlobalAccessesAreElided) {
  auto p = mir::parse(
      "global g 8\nfn main() {\nentry:\n  %a = alloca 8\n  %g = global_addr g\n"
      "  %v = load i64 %a\n  store i64 %v, %g\n  %d = ptradd %a, 0\n  %w = load i64 %d\n  ret\n}\n");
  InstrumentResult r = instrument_program(p);
  EXPECT_EQ(r.stats.checks_elided, 2u);
  EXPECT_EQ(r.stats.checks_inserted, 1u);  // derived pointer is not provably underived
  EXPECT_NEAR(r.stats.elision_percent(), 66.667, 0.01);

  InstrumentOptions no_opt;
  no_opt.enable_check_removal = false;
  InstrumentResult n = instrument_program(p, no_opt);
  EXPECT_EQ(n.stats.checks_elided, 0u);
  EXPECT_EQ(n.stats.checks_inserted, 3u);
}

TEST(Instrument, PhiOfLocalsIsElidedButMixedPhiIsNot) {
  const char* text = R"(fn main() {
entry:
  %a = alloca 8
  %b = alloca 8
  %n = const 8
  %h = call malloc(%n)
  cbr %n, l, r
l:
  br j
r:
  br j
j:
  %both = phi [l, %a], [r, %b]
  %mixed = phi [l, %a], [r, %h]
  %x = load i64 %both
  %y = load i64 %mixed
  ret
}
)";
  auto p = mir::parse(text);
  const auto& fn = p.functions[0];
  auto safe = underived_local_registers(fn);
  EXPECT_TRUE(safe.count("%both"));
  EXPECT_FALSE(safe.count("%mixed"));
  EXPECT_EQ(analyze_origins(fn), (std::set<SiteId>{{3, 2}}));
}

TEST(Instrument, LoopCarriedPhiNeedsEverySource) {
  const char* text = R"(fn main() {
entry:
  %a = alloca 16
  %n = const 8
  br loop
loop:
  %p = phi [entry, %a], [loop, %q]
  %q = phi [entry, %a], [loop, %p]
  %r = phi [entry, %a], [loop, %s]
  %s = ptradd %r, 8
  %x = load i64 %p
  %y = load i64 %r
  cbr %n, loop, done
done:
  ret
}
)";
  auto safe = underived_local_registers(mir::parse(text).functions[0]);
  EXPECT_TRUE(safe.count("%p"));
  EXPECT_TRUE(safe.count("%q"));
  EXPECT_FALSE(safe.count("%r"));
}

TEST(Instrument, AllocatorCallsAreRedirected) {
  auto p = mir::parse(
      "fn main() {\nentry:\n  %n = const 8\n  %a = call malloc(%n)\n  %b = call calloc(%n, %n)\n"
      "  %c = call realloc(%a, %n)\n  %d = call memalign(%n, %n)\n  %e = call new(%n)\n"
      "  call delete(%e)\n  call free(%c)\n  ret\n}\n");
  const InstrumentResult result = instrument_program(p);
  const auto& ins = result.program.functions[0].blocks[0].instrs;
  std::vector<std::string> names;
  for (const auto& in : ins) {
    if (in.op == Opcode::Call) names.push_back(in.name);
  }
  EXPECT_EQ(names, (std::vector<std::string>{"mesh.malloc", "mesh.calloc", "mesh.realloc",
                                             "mesh.memalign", "mesh.malloc", "mesh.free",
                                             "mesh.free"}));
}

TEST(Instrument, UnknownAllocatorNameIsRejected) {
  auto p = mir::parse("fn main() {\nentry:\n  ret\n}\n");
  InstrumentOptions o;
  o.allocator_names.insert("my_alloc");
  EXPECT_THROW(instrument_program(p, o), InstrumentError);
}

TEST(Instrument, ExternPointerArgumentsAreCheckedAndStripped) {
  const char* text = R"(extern sink(2) behavior byte_sink
fn main() {
entry:
  %n = const 8
  %p = call malloc(%n)
  %a = alloca 8
  %s = call sink(%p, %n)
  %t = call sink(%a, %n)
  ret
}
)";
  InstrumentResult r = instrument_program(mir::parse(text));
  const auto& f = r.program.functions[0];
  EXPECT_EQ(r.stats.external_calls_wrapped, 1u);
  EXPECT_EQ(count(f, Opcode::ArgCheck), 1u);
  const auto& ins = f.blocks[0].instrs;
  // The length argument is an integer and passes through unchanged.
  const mir::Instr& call = ins[5];
  ASSERT_EQ(call.op, Opcode::Call);
  EXPECT_EQ(call.args[0], ins[4].dest);
  EXPECT_EQ(call.args[1], "%n");

  InstrumentOptions no_opt;
  no_opt.enable_check_removal = false;
  EXPECT_EQ(instrument_program(mir::parse(text), no_opt).stats.external_calls_wrapped, 2u);
}

TEST(Instrument, IdentityExternGetsItsTagBack) {
  const char* text = R"(extern id(1) returns_arg 0 behavior identity_return
fn main() {
entry:
  %n = const 8
  %p = call malloc(%n)
  %q = call id(%p)
  ret
}
)";
  const InstrumentResult result = instrument_program(mir::parse(text));
  const auto& ins = result.program.functions[0].blocks[0].instrs;
  ASSERT_EQ(ins.size(), 7u);
  EXPECT_EQ(ins[2].op, Opcode::TagOf);
  EXPECT_EQ(ins[3].op, Opcode::ArgCheck);
  EXPECT_EQ(ins[4].op, Opcode::Strip);
  EXPECT_EQ(ins[5].op, Opcode::Call);
  EXPECT_EQ(ins[6].op, Opcode::Retag);
  EXPECT_EQ(ins[6].dest, "%q");
  EXPECT_EQ(ins[6].args, (std::vector<std::string>{ins[2].dest, ins[5].dest}));
}

TEST(Instrument, SameRegisterInTwoPointerSlotsIsStrippedOnce) {
  const char* text = R"(extern copy(2) returns_arg 1 behavior identity_return
fn main() {
entry:
  %n = const 8
  %p = call malloc(%n)
  %q = call copy(%p, %p)
  ret
}
)";
  auto r = instrument_program(mir::parse(text));
  EXPECT_EQ(count(r.program.functions[0], Opcode::ArgCheck), 1u);
  EXPECT_TRUE(mir::validate(r.program).empty());
}

TEST(Instrument, FreshNamesAvoidCollisions) {
  auto p = mir::parse(
      "fn main() {\nentry:\n  %m0 = const 8\n  %p = call malloc(%m0)\n  %m1 = load i8 %p\n  ret\n}\n");
  auto r = instrument_program(p);
  EXPECT_TRUE(mir::validate(r.program).empty());
}

TEST(Instrument, OutputReparses) {
  for (const auto& f : mesh::testing::corpus_programs()) {
    SCOPED_TRACE(f.filename().string());
    auto r = instrument_program(mir::parse(mesh::read_file(f)));
    auto again = mir::parse(mir::print(r.program));
    EXPECT_EQ(again, r.program);
  }
}

TEST(Instrument, StackHeavyFixtureElidesChecks) {
  auto p = mir::parse(mesh::read_file(mesh::testing::corpus_dir() / "stack_heavy.mir"));
  auto r = instrument_program(p);
  EXPECT_GE(r.stats.checks_elided, 1u);
  EXPECT_EQ(r.stats.checks_inserted + r.stats.checks_elided, p.memory_access_count());
}

}  // namespace
}  // namespace mesh
