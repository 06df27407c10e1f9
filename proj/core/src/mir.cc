#include "mesh/mir.h"

#include <array>
#include <sstream>

namespace mesh::mir {

namespace {

constexpr std::array<std::string_view, 10> kPredicates = {
    "eq", "ne", "ult", "ule", "ugt", "uge", "slt", "sle", "sgt", "sge"};

constexpr std::array<std::string_view, 5> kBehaviors = {
    "identity_return", "nh_alloc", "nh_free", "byte_sink", "byte_source"};

constexpr std::array<Builtin, 7> kBuiltins = {{
    {"malloc", 1}, {"free", 1}, {"calloc", 2}, {"realloc", 2},
    {"memalign", 2}, {"new", 1}, {"delete", 1},
}};

constexpr std::array<Builtin, 5> kIntrinsics = {{
    {"mesh.malloc", 1}, {"mesh.free", 1}, {"mesh.calloc", 2},
    {"mesh.realloc", 2}, {"mesh.memalign", 2},
}};

}  // namespace

std::string_view to_string(Opcode op) {
  switch (op) {
    case Opcode::Const: return "const";
    case Opcode::Alloca: return "alloca";
    case Opcode::GlobalAddr: return "global_addr";
    case Opcode::Load: return "load";
    case Opcode::Store: return "store";
    case Opcode::PtrAdd: return "ptradd";
    case Opcode::Add: return "add";
    case Opcode::Sub: return "sub";
    case Opcode::Mul: return "mul";
    case Opcode::ICmp: return "icmp";
    case Opcode::Phi: return "phi";
    case Opcode::Call: return "call";
    case Opcode::Print: return "print";
    case Opcode::Check: return "check";
    case Opcode::ArgCheck: return "argcheck";
    case Opcode::Strip: return "strip";
    case Opcode::TagOf: return "tagof";
    case Opcode::Retag: return "retag";
  }
  return "?";
}

std::string_view to_string(Predicate p) { return kPredicates[static_cast<size_t>(p)]; }

std::optional<Predicate> parse_predicate(std::string_view s) {
  for (size_t i = 0; i < kPredicates.size(); ++i) {
    if (kPredicates[i] == s) return static_cast<Predicate>(i);
  }
  return std::nullopt;
}

std::string_view to_string(ExternBehavior b) { return kBehaviors[static_cast<size_t>(b)]; }

std::optional<ExternBehavior> parse_extern_behavior(std::string_view s) {
  for (size_t i = 0; i < kBehaviors.size(); ++i) {
    if (kBehaviors[i] == s) return static_cast<ExternBehavior>(i);
  }
  return std::nullopt;
}

std::vector<unsigned> ExternDecl::pointer_params() const {
  switch (behavior) {
    case ExternBehavior::IdentityReturn:
      if (returns_arg) return {*returns_arg};
      return {};
    case ExternBehavior::NormalHeapAlloc:
      return {};
    case ExternBehavior::NormalHeapFree:
    case ExternBehavior::ByteSink:
    case ExternBehavior::ByteSource:
      return {0};
  }
  return {};
}

std::optional<Builtin> find_builtin(std::string_view name) {
  for (const Builtin& b : kBuiltins) {
    if (b.name == name) return b;
  }
  return std::nullopt;
}

std::optional<Builtin> find_intrinsic(std::string_view name) {
  for (const Builtin& b : kIntrinsics) {
    if (b.name == name) return b;
  }
  return std::nullopt;
}

const Block* Function::find_block(std::string_view label) const {
  for (const Block& b : blocks) {
    if (b.label == label) return &b;
  }
  return nullptr;
}

size_t Function::instruction_count() const {
  size_t n = 0;
  for (const Block& b : blocks) n += b.instrs.size();
  return n;
}

const Function* Program::find_function(std::string_view name) const {
  for (const Function& f : functions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const ExternDecl* Program::find_extern(std::string_view name) const {
  for (const ExternDecl& e : externs) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const Global* Program::find_global(std::string_view name) const {
  for (const Global& g : globals) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

size_t Program::memory_access_count() const {
  size_t n = 0;
  for (const Function& f : functions) {
    for (const Block& b : f.blocks) {
      for (const Instr& i : b.instrs) n += i.is_memory_access() ? 1 : 0;
    }
  }
  return n;
}

std::string Diagnostic::str() const {
  std::ostringstream os;
  os << line << ":" << column << ": " << message;
  return os.str();
}

namespace {

void print_args(std::ostream& os, const std::vector<std::string>& args) {
  os << "(";
  for (size_t i = 0; i < args.size(); ++i) os << (i ? ", " : "") << args[i];
  os << ")";
}

void print_instr(std::ostream& os, const Instr& in) {
  os << "  ";
  if (!in.dest.empty()) os << in.dest << " = ";
  switch (in.op) {
    case Opcode::Const: os << "const " << in.imm; break;
    case Opcode::Alloca: os << "alloca " << in.imm; break;
    case Opcode::GlobalAddr: os << "global_addr " << in.name; break;
    case Opcode::Load: os << "load i" << in.width * 8 << " " << in.args[0]; break;
    case Opcode::Store:
      os << "store i" << in.width * 8 << " " << in.args[0] << ", " << in.args[1];
      break;
    case Opcode::PtrAdd:
      os << "ptradd " << in.args[0] << ", ";
      if (in.imm_operand) {
        os << in.imm;
      } else {
        os << in.args[1];
      }
      break;
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
      os << to_string(in.op) << " " << in.args[0] << ", " << in.args[1];
      break;
    case Opcode::ICmp:
      os << "icmp " << to_string(in.pred) << " " << in.args[0] << ", " << in.args[1];
      break;
    case Opcode::Phi:
      os << "phi ";
      for (size_t i = 0; i < in.incoming.size(); ++i) {
        os << (i ? ", " : "") << "[" << in.incoming[i].label << ", " << in.incoming[i].reg << "]";
      }
      break;
    case Opcode::Call:
      os << "call " << in.name;
      print_args(os, in.args);
      break;
    case Opcode::Print: os << "print " << in.args[0]; break;
    case Opcode::Check: os << "check i" << in.width * 8 << " " << in.args[0]; break;
    case Opcode::ArgCheck: os << "argcheck " << in.args[0]; break;
    case Opcode::Strip: os << "strip " << in.args[0]; break;
    case Opcode::TagOf: os << "tagof " << in.args[0]; break;
    case Opcode::Retag: os << "retag " << in.args[0] << ", " << in.args[1]; break;
  }
  os << "\n";
}

void print_terminator(std::ostream& os, const Terminator& t) {
  os << "  ";
  switch (t.kind) {
    case TermKind::Br: os << "br " << t.targets[0]; break;
    case TermKind::CondBr:
      os << "cbr " << t.cond << ", " << t.targets[0] << ", " << t.targets[1];
      break;
    case TermKind::Ret:
      os << "ret";
      if (t.value) os << " " << *t.value;
      break;
  }
  os << "\n";
}

}  // namespace

std::string print(const Program& program) {
  std::ostringstream os;
  for (const Global& g : program.globals) os << "global " << g.name << " " << g.size << "\n";
  for (const ExternDecl& e : program.externs) {
    os << "extern " << e.name << "(" << e.param_count << ")";
    if (e.returns_arg) os << " returns_arg " << *e.returns_arg;
    os << " behavior " << to_string(e.behavior) << "\n";
  }
  for (const Function& f : program.functions) {
    if (os.tellp() > 0) os << "\n";
    os << "fn " << f.name;
    print_args(os, f.params);
    os << " {\n";
    for (const Block& b : f.blocks) {
      os << b.label << ":\n";
      for (const Instr& in : b.instrs) print_instr(os, in);
      print_terminator(os, b.term);
    }
    os << "}\n";
  }
  return os.str();
}

}  // namespace mesh::mir
