#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mesh::mir {

// Where an instruction came from. Never part of structural equality.
struct SourceInfo {
  int line = 0;
  int column = 0;
  // Flat position of the originating instruction in the source function.
  // Instrumentation keeps the index of the access or call it guards, so
  // reports from raw and instrumented runs line up.
  int index = -1;

  friend bool operator==(const SourceInfo&, const SourceInfo&) { return true; }
};

enum class Opcode {
  Const,
  Alloca,
  GlobalAddr,
  Load,
  Store,
  PtrAdd,
  Add,
  Sub,
  Mul,
  ICmp,
  Phi,
  Call,
  Print,
  // Emitted by the instrumentation pass.
  Check,      // check WIDTH reg
  ArgCheck,   // argcheck reg
  Strip,      // r = strip reg
  TagOf,      // r = tagof reg
  Retag,      // r = retag tag_reg, ptr_reg
};

enum class Predicate { Eq, Ne, Ult, Ule, Ugt, Uge, Slt, Sle, Sgt, Sge };

std::string_view to_string(Opcode op);
std::string_view to_string(Predicate p);
std::optional<Predicate> parse_predicate(std::string_view s);

struct PhiIncoming {
  std::string label;
  std::string reg;
  friend bool operator==(const PhiIncoming&, const PhiIncoming&) = default;
};

struct Instr {
  Opcode op = Opcode::Const;
  std::string dest;               // empty for store/print/check/void call
  unsigned width = 0;             // load/store/check
  std::vector<std::string> args;  // register operands, in source order
  int64_t imm = 0;                // const value, alloca size, ptradd offset
  bool imm_operand = false;       // ptradd with an immediate offset
  std::string name;               // global, callee
  Predicate pred = Predicate::Eq;
  std::vector<PhiIncoming> incoming;
  SourceInfo src;

  bool is_memory_access() const { return op == Opcode::Load || op == Opcode::Store; }
  // Register holding the accessed address.
  const std::string& address_reg() const {
    return op == Opcode::Load ? args.at(0) : args.at(1);
  }

  friend bool operator==(const Instr&, const Instr&) = default;
};

enum class TermKind { Br, CondBr, Ret };

struct Terminator {
  TermKind kind = TermKind::Ret;
  std::string cond;                  // cbr
  std::vector<std::string> targets;  // br: 1, cbr: 2
  std::optional<std::string> value;  // ret
  SourceInfo src;

  friend bool operator==(const Terminator&, const Terminator&) = default;
};

struct Block {
  std::string label;
  std::vector<Instr> instrs;
  Terminator term;

  friend bool operator==(const Block&, const Block&) = default;
};

struct Function {
  std::string name;
  std::vector<std::string> params;
  std::vector<Block> blocks;
  SourceInfo src;

  const Block* find_block(std::string_view label) const;
  size_t instruction_count() const;

  friend bool operator==(const Function&, const Function&) = default;
};

// Simulated behavior of an uninstrumented external function.
enum class ExternBehavior {
  IdentityReturn,   // returns its `returns_arg` argument
  NormalHeapAlloc,  // (size) -> untagged normal-heap address
  NormalHeapFree,   // (address)
  ByteSink,         // (address, n) reads n bytes, returns their sum
  ByteSource,       // (address, n) writes bytes 0, 1, 2, ... returns n
};

std::string_view to_string(ExternBehavior b);
std::optional<ExternBehavior> parse_extern_behavior(std::string_view s);

struct ExternDecl {
  std::string name;
  unsigned param_count = 0;
  std::optional<unsigned> returns_arg;
  ExternBehavior behavior = ExternBehavior::IdentityReturn;
  SourceInfo src;

  bool returns_value() const { return behavior != ExternBehavior::NormalHeapFree; }
  // Parameter positions that carry pointers, fixed by the behavior.
  std::vector<unsigned> pointer_params() const;

  friend bool operator==(const ExternDecl&, const ExternDecl&) = default;
};

struct Global {
  std::string name;
  uint64_t size = 0;
  SourceInfo src;
  friend bool operator==(const Global&, const Global&) = default;
};

struct Program {
  std::vector<Global> globals;
  std::vector<ExternDecl> externs;
  std::vector<Function> functions;

  const Function* find_function(std::string_view name) const;
  const ExternDecl* find_extern(std::string_view name) const;
  const Global* find_global(std::string_view name) const;
  // Loads plus stores over every function.
  size_t memory_access_count() const;

  friend bool operator==(const Program&, const Program&) = default;
};

// Allocator entry points the interpreter knows without a declaration.
struct Builtin {
  std::string_view name;
  unsigned params;
};
std::optional<Builtin> find_builtin(std::string_view name);
// Runtime routines the instrumentation pass redirects allocator calls to.
std::optional<Builtin> find_intrinsic(std::string_view name);

struct Diagnostic {
  int line = 0;
  int column = 0;
  std::string message;

  std::string str() const;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(Diagnostic d) : std::runtime_error(d.str()), diag_(std::move(d)) {}
  const Diagnostic& diagnostic() const { return diag_; }

 private:
  Diagnostic diag_;
};

// Grammar only; no name resolution.
Program parse_syntax(std::string_view text);
// parse_syntax followed by validate; throws ParseError on the first diagnostic.
Program parse(std::string_view text);
std::string print(const Program& program);

// Structural checks beyond the grammar. Empty result means valid.
std::vector<Diagnostic> validate(const Program& program);

}  // namespace mesh::mir
