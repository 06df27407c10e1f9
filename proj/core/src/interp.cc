#include "mesh/interp.h"

#include <map>
#include <unordered_map>

#include "mesh/errors.h"

namespace mesh {

using mir::Opcode;

std::string_view to_string(ExitKind kind) {
  switch (kind) {
    case ExitKind::Normal: return "normal";
    case ExitKind::AbortedOnViolation: return "aborted-on-violation";
    case ExitKind::Fault: return "fault";
  }
  return "?";
}

namespace {

constexpr int kNone = -1;
constexpr size_t kMaxCallDepth = 100'000;

enum class Callee {
  Function,
  Extern,
  Malloc,
  Free,
  Calloc,
  Realloc,
  Memalign,
  MeshMalloc,
  MeshFree,
  MeshCalloc,
  MeshRealloc,
  MeshMemalign,
};

struct LInstr {
  Opcode op;
  int dest = kNone;
  std::vector<int> args;
  unsigned width = 0;
  int64_t imm = 0;
  bool imm_operand = false;
  mir::Predicate pred = mir::Predicate::Eq;
  uint64_t global_address = 0;
  Callee callee = Callee::Function;
  size_t callee_index = 0;
  std::vector<std::pair<int, int>> incoming;  // (predecessor block, register)
  // Address comes straight from a strip, i.e. a check guarded it.
  bool checked = false;
  int index = -1;
};

struct LTerm {
  mir::TermKind kind;
  int cond = kNone;
  std::vector<size_t> targets;
  int value = kNone;
};

struct LBlock {
  std::vector<LInstr> instrs;
  size_t phi_count = 0;
  LTerm term;
};

struct LFunction {
  std::string name;
  size_t register_count = 0;
  std::vector<int> params;
  std::vector<LBlock> blocks;
};

class Lowering {
 public:
  Lowering(const mir::Program& program, const std::map<std::string, uint64_t>& globals)
      : program_(program), globals_(globals) {}

  std::vector<LFunction> run() {
    std::vector<LFunction> out;
    for (const mir::Function& f : program_.functions) out.push_back(lower(f));
    return out;
  }

 private:
  LFunction lower(const mir::Function& f) {
    std::map<std::string, int> regs;
    std::map<std::string, size_t> labels;
    std::map<std::string, bool> from_strip;
    auto slot = [&](const std::string& r) {
      auto [it, inserted] = regs.try_emplace(r, static_cast<int>(regs.size()));
      return it->second;
    };
    for (size_t i = 0; i < f.blocks.size(); ++i) labels[f.blocks[i].label] = i;

    LFunction lf;
    lf.name = f.name;
    for (const std::string& p : f.params) lf.params.push_back(slot(p));
    for (const mir::Block& b : f.blocks) {
      for (const mir::Instr& in : b.instrs) {
        if (in.op == Opcode::Strip) from_strip[in.dest] = true;
      }
    }

    for (const mir::Block& b : f.blocks) {
      LBlock lb;
      for (const mir::Instr& in : b.instrs) {
        LInstr li;
        li.op = in.op;
        li.dest = in.dest.empty() ? kNone : slot(in.dest);
        for (const std::string& a : in.args) li.args.push_back(slot(a));
        li.width = in.width;
        li.imm = in.imm;
        li.imm_operand = in.imm_operand;
        li.pred = in.pred;
        li.index = in.src.index;
        if (in.op == Opcode::Phi) {
          ++lb.phi_count;
          for (const mir::PhiIncoming& inc : in.incoming) {
            li.incoming.emplace_back(static_cast<int>(labels.at(inc.label)), slot(inc.reg));
          }
        }
        if (in.op == Opcode::GlobalAddr) li.global_address = globals_.at(in.name);
        if (in.is_memory_access()) li.checked = from_strip.count(in.address_reg()) > 0;
        if (in.op == Opcode::Call) resolve_call(in.name, li);
        lb.instrs.push_back(std::move(li));
      }
      lb.term.kind = b.term.kind;
      if (b.term.kind == mir::TermKind::CondBr) lb.term.cond = slot(b.term.cond);
      for (const std::string& t : b.term.targets) lb.term.targets.push_back(labels.at(t));
      if (b.term.value) lb.term.value = slot(*b.term.value);
      lf.blocks.push_back(std::move(lb));
    }
    lf.register_count = regs.size();
    return lf;
  }

  void resolve_call(const std::string& name, LInstr& li) {
    for (size_t i = 0; i < program_.functions.size(); ++i) {
      if (program_.functions[i].name == name) {
        li.callee = Callee::Function;
        li.callee_index = i;
        return;
      }
    }
    for (size_t i = 0; i < program_.externs.size(); ++i) {
      if (program_.externs[i].name == name) {
        li.callee = Callee::Extern;
        li.callee_index = i;
        return;
      }
    }
    static const std::map<std::string, Callee> builtins = {
        {"malloc", Callee::Malloc},          {"new", Callee::Malloc},
        {"free", Callee::Free},              {"delete", Callee::Free},
        {"calloc", Callee::Calloc},          {"realloc", Callee::Realloc},
        {"memalign", Callee::Memalign},      {"mesh.malloc", Callee::MeshMalloc},
        {"mesh.free", Callee::MeshFree},     {"mesh.calloc", Callee::MeshCalloc},
        {"mesh.realloc", Callee::MeshRealloc}, {"mesh.memalign", Callee::MeshMemalign},
    };
    li.callee = builtins.at(name);
  }

  const mir::Program& program_;
  const std::map<std::string, uint64_t>& globals_;
};

struct Frame {
  const LFunction* fn;
  std::vector<uint64_t> regs;
  std::vector<int64_t> prov;  // ghost provenance: object id or -1
  size_t block = 0;
  size_t ip = 0;
  uint64_t saved_sp = 0;
  int return_slot = kNone;  // destination register in the caller
};

class Machine {
 public:
  Machine(const mir::Program& program, const RunConfig& config)
      : program_(program),
        config_(config),
        memory_(layout(config)),
        runtime_(memory_, RuntimeOptions{config.tags, config.wrap}),
        shadow_(memory_.safe_heap_upper()),
        sp_(MemoryLayout::kStackTop) {
    if (config.oracle) report_.oracle.emplace();
  }

  ExecutionReport execute() {
    const mir::Function* main_fn = program_.find_function("main");
    if (main_fn == nullptr) throw mir::ParseError({0, 0, "program has no 'main' function"});
    if (auto diags = mir::validate(program_); !diags.empty()) {
      throw mir::ParseError(diags.front());
    }
    try {
      layout_globals();
      functions_ = Lowering(program_, global_addresses_).run();
      const size_t main_index = static_cast<size_t>(main_fn - program_.functions.data());
      push_frame(functions_[main_index], {}, {}, kNone);
      loop();
    } catch (const SimulatorFault& fault) {
      report_.exit = ExitKind::Fault;
      report_.fault_message = fault.what();
    }
    report_.runtime_stats = runtime_.stats();
    return std::move(report_);
  }

 private:
  static MemoryLayout layout(const RunConfig& config) {
    MemoryLayout l;
    l.safe_heap_size = config.safe_heap_size;
    return l;
  }

  void layout_globals() {
    const Region& g = memory_.region(RegionKind::Globals);
    uint64_t next = g.base();
    for (const mir::Global& gl : program_.globals) {
      if (gl.size > g.end() - next) throw MemoryFault("globals do not fit", next);
      global_addresses_[gl.name] = next;
      next += (gl.size + 15) & ~uint64_t{15};
      if (next > g.end()) next = g.end();
    }
  }

  // --- frames -------------------------------------------------------------

  void push_frame(const LFunction& fn, const std::vector<uint64_t>& args,
                  const std::vector<int64_t>& prov, int return_slot) {
    if (frames_.size() >= kMaxCallDepth) throw SimulatorFault("call depth limit exceeded");
    Frame f;
    f.fn = &fn;
    f.regs.assign(fn.register_count, 0);
    f.prov.assign(fn.register_count, kNone);
    for (size_t i = 0; i < fn.params.size(); ++i) {
      f.regs[fn.params[i]] = i < args.size() ? args[i] : 0;
      f.prov[fn.params[i]] = i < prov.size() ? prov[i] : kNone;
    }
    f.saved_sp = sp_;
    f.return_slot = return_slot;
    frames_.push_back(std::move(f));
    enter_block(frames_.back(), 0, kNone);
  }

  void enter_block(Frame& f, size_t target, int from) {
    const LBlock& b = f.fn->blocks[target];
    f.block = target;
    f.ip = b.phi_count;
    if (b.phi_count == 0) return;
    // Phis at a block head read their sources simultaneously.
    std::vector<std::pair<uint64_t, int64_t>> values;
    values.reserve(b.phi_count);
    for (size_t i = 0; i < b.phi_count; ++i) {
      step();
      const LInstr& phi = b.instrs[i];
      bool found = false;
      for (auto [pred, reg] : phi.incoming) {
        if (pred == from) {
          values.emplace_back(f.regs[reg], f.prov[reg]);
          found = true;
          break;
        }
      }
      if (!found) throw SimulatorFault("phi has no incoming value for the taken edge");
    }
    for (size_t i = 0; i < b.phi_count; ++i) {
      f.regs[b.instrs[i].dest] = values[i].first;
      f.prov[b.instrs[i].dest] = values[i].second;
    }
  }

  void step() {
    if (++report_.steps > config_.step_limit) throw SimulatorFault("step limit exceeded");
  }

  // --- main loop ----------------------------------------------------------

  void loop() {
    while (!frames_.empty() && !stopped_) {
      Frame& f = frames_.back();
      const LBlock& b = f.fn->blocks[f.block];
      if (f.ip < b.instrs.size()) {
        const LInstr& in = b.instrs[f.ip++];
        step();
        exec(f, in);
        continue;
      }
      step();
      terminate(f, b.term);
    }
  }

  void terminate(Frame& f, const LTerm& t) {
    switch (t.kind) {
      case mir::TermKind::Br:
        enter_block(f, t.targets[0], static_cast<int>(f.block));
        return;
      case mir::TermKind::CondBr: {
        size_t target = f.regs[t.cond] != 0 ? t.targets[0] : t.targets[1];
        enter_block(f, target, static_cast<int>(f.block));
        return;
      }
      case mir::TermKind::Ret: {
        uint64_t value = t.value == kNone ? 0 : f.regs[t.value];
        int64_t prov = t.value == kNone ? kNone : f.prov[t.value];
        int slot = f.return_slot;
        sp_ = f.saved_sp;
        frames_.pop_back();
        if (frames_.empty()) {
          if (t.value != kNone) report_.return_value = value;
          return;
        }
        if (slot != kNone) set(frames_.back(), slot, value, prov);
        return;
      }
    }
  }

  static void set(Frame& f, int slot, uint64_t value, int64_t prov = kNone) {
    if (slot == kNone) return;
    f.regs[slot] = value;
    f.prov[slot] = prov;
  }

  std::optional<ObjectId> provenance(int64_t p) const {
    if (p < 0) return std::nullopt;
    return static_cast<ObjectId>(p);
  }

  const std::string& fn_name() const { return frames_.back().fn->name; }

  // Records a violation. Returns true when execution must stop.
  bool violation(const Violation& v, const LInstr& in) {
    report_.violations.push_back({v, fn_name(), in.index});
    if (config_.abort_on_violation) {
      report_.exit = ExitKind::AbortedOnViolation;
      stopped_ = true;
      return true;
    }
    return false;
  }

  void oracle_finding(std::optional<ViolationKind> kind, const LInstr& in) {
    if (kind) report_.oracle_findings.push_back({*kind, fn_name(), in.index});
  }

  void compare(std::optional<ObjectId> prov, TaggedPointer p, uint64_t size,
               std::optional<ViolationKind> mesh, std::optional<ViolationKind> truth,
               const LInstr& in) {
    if (!report_.oracle) return;
    const uint64_t tag = tag_of(p, config_.tags);
    const TableRow row = tag == 0 ? TableRow{} : runtime_.row(tag);
    AccessComparison c =
        compare_access(shadow_, prov, p, size, mesh, truth, config_.tags, row);
    c.function = fn_name();
    c.instr_index = in.index;
    report_.oracle->add(std::move(c));
  }

  void exec(Frame& f, const LInstr& in) {
    auto reg = [&](size_t i) { return f.regs[in.args[i]]; };
    auto prov = [&](size_t i) { return f.prov[in.args[i]]; };

    switch (in.op) {
      case Opcode::Const:
        set(f, in.dest, static_cast<uint64_t>(in.imm));
        return;
      case Opcode::Alloca: {
        const Region& stack = memory_.region(RegionKind::Stack);
        const auto size = static_cast<uint64_t>(in.imm);
        if (size > sp_ - stack.base()) throw MemoryFault("stack overflow", sp_);
        sp_ = (sp_ - size) & ~uint64_t{15};
        if (sp_ < stack.base()) throw MemoryFault("stack overflow", sp_);
        memory_.fill(sp_, size, 0);
        set(f, in.dest, sp_);
        return;
      }
      case Opcode::GlobalAddr:
        set(f, in.dest, in.global_address);
        return;
      case Opcode::Load: {
        const uint64_t address = reg(0);
        access(in, address, prov(0));
        uint64_t value = memory_.read_word(address, in.width);
        int64_t p = kNone;
        if (in.width == 8) {
          auto it = ghost_memory_.find(address);
          if (it != ghost_memory_.end()) p = it->second;
        }
        set(f, in.dest, value, p);
        return;
      }
      case Opcode::Store: {
        const uint64_t address = reg(1);
        access(in, address, prov(1));
        memory_.write_word(address, in.width, reg(0));
        for (uint64_t a = address - 7; a != address + in.width; ++a) ghost_memory_.erase(a);
        if (in.width == 8 && prov(0) != kNone) ghost_memory_[address] = prov(0);
        return;
      }
      case Opcode::PtrAdd: {
        int64_t offset = in.imm_operand ? in.imm : static_cast<int64_t>(reg(1));
        set(f, in.dest, ptr_add(TaggedPointer{reg(0)}, offset).raw(), prov(0));
        return;
      }
      case Opcode::Add:
        set(f, in.dest, reg(0) + reg(1), prov(1) == kNone ? prov(0) : prov(0) == kNone ? prov(1) : kNone);
        return;
      case Opcode::Sub:
        set(f, in.dest, reg(0) - reg(1), prov(1) == kNone ? prov(0) : kNone);
        return;
      case Opcode::Mul:
        set(f, in.dest, reg(0) * reg(1));
        return;
      case Opcode::ICmp:
        set(f, in.dest, compare_values(in.pred, reg(0), reg(1)) ? 1 : 0);
        return;
      case Opcode::Phi:
        throw SimulatorFault("phi executed outside a block head");
      case Opcode::Print:
        report_.outputs.push_back(reg(0));
        return;
      case Opcode::Check: {
        const TaggedPointer p{reg(0)};
        auto v = runtime_.safety_check(p, in.width);
        if (report_.oracle) {
          auto truth = shadow_.check(provenance(prov(0)), strip(p, config_.tags), in.width);
          oracle_finding(truth, in);
          compare(provenance(prov(0)), p, in.width,
                  v ? std::optional(v->kind) : std::nullopt, truth, in);
        }
        if (v) violation(*v, in);
        return;
      }
      case Opcode::ArgCheck: {
        const TaggedPointer p{reg(0)};
        auto v = runtime_.argument_check(p);
        if (report_.oracle && tag_of(p, config_.tags) != 0) {
          auto truth = shadow_.check(provenance(prov(0)), strip(p, config_.tags), 0);
          compare(provenance(prov(0)), p, 0, v ? std::optional(v->kind) : std::nullopt, truth, in);
        }
        if (v) violation(*v, in);
        return;
      }
      case Opcode::Strip:
        set(f, in.dest, strip(TaggedPointer{reg(0)}, config_.tags), prov(0));
        return;
      case Opcode::TagOf:
        set(f, in.dest, tag_of(TaggedPointer{reg(0)}, config_.tags), prov(0));
        return;
      case Opcode::Retag:
        set(f, in.dest, retag(TaggedPointer{reg(1)}, reg(0), config_.tags).raw(),
            prov(1) != kNone ? prov(1) : prov(0));
        return;
      case Opcode::Call:
        call(f, in);
        return;
    }
  }

  static bool compare_values(mir::Predicate p, uint64_t a, uint64_t b) {
    const auto sa = static_cast<int64_t>(a);
    const auto sb = static_cast<int64_t>(b);
    switch (p) {
      case mir::Predicate::Eq: return a == b;
      case mir::Predicate::Ne: return a != b;
      case mir::Predicate::Ult: return a < b;
      case mir::Predicate::Ule: return a <= b;
      case mir::Predicate::Ugt: return a > b;
      case mir::Predicate::Uge: return a >= b;
      case mir::Predicate::Slt: return sa < sb;
      case mir::Predicate::Sle: return sa <= sb;
      case mir::Predicate::Sgt: return sa > sb;
      case mir::Predicate::Sge: return sa >= sb;
    }
    return false;
  }

  // Bookkeeping for a load/store about to touch memory.
  void access(const LInstr& in, uint64_t address, int64_t prov) {
    if (in.checked) return;  // the guarding check already consulted the oracle
    if (tag_of(TaggedPointer{address}, config_.tags) != 0) ++report_.tagged_unchecked_accesses;
    if (!report_.oracle) return;
    auto truth = shadow_.check(provenance(prov), address, in.width);
    oracle_finding(truth, in);
    if (instrumented_) {
      compare(provenance(prov), TaggedPointer{address}, in.width, std::nullopt, truth, in);
    }
  }

  // --- calls ----------------------------------------------------------------

  void call(Frame& f, const LInstr& in) {
    std::vector<uint64_t> args;
    std::vector<int64_t> prov;
    for (int a : in.args) {
      args.push_back(f.regs[a]);
      prov.push_back(f.prov[a]);
    }
    switch (in.callee) {
      case Callee::Function:
        push_frame(functions_[in.callee_index], args, prov, in.dest);
        return;
      case Callee::Extern:
        call_extern(f, in, program_.externs[in.callee_index], args, prov);
        return;
      case Callee::Malloc: {
        const uint64_t a = nh_allocate(runtime_.nh_alloc(args[0]), args[0]);
        set(f, in.dest, a, last_object_);
        return;
      }
      case Callee::Memalign: {
        if (args[0] == 0 || (args[0] & (args[0] - 1)) != 0) {
          set(f, in.dest, 0);
          return;
        }
        const uint64_t a =
            nh_allocate(runtime_.nh_alloc(args[1], std::max<uint64_t>(args[0], 16)), args[1]);
        set(f, in.dest, a, last_object_);
        return;
      }
      case Callee::Calloc: {
        uint64_t total = 0;
        if (__builtin_mul_overflow(args[0], args[1], &total)) {
          set(f, in.dest, 0);
          return;
        }
        uint64_t a = nh_allocate(runtime_.nh_alloc(total), total);
        if (a != 0) memory_.fill(a, total, 0);
        set(f, in.dest, a, last_object_);
        return;
      }
      case Callee::Realloc: {
        const uint64_t old = args[0];
        auto fresh = runtime_.nh_realloc(old, args[1]);
        if (fresh && old != 0) nh_release_shadow(old);
        const uint64_t a = nh_allocate(fresh, args[1]);
        set(f, in.dest, a, last_object_);
        return;
      }
      case Callee::Free:
        if (args[0] == 0) return;
        if (report_.oracle) oracle_finding(shadow_.check_free(provenance(prov[0]), args[0]), in);
        if (!runtime_.nh_free(args[0])) {
          throw MemoryFault("free of an address the normal heap never allocated", args[0]);
        }
        nh_release_shadow(args[0]);
        return;
      case Callee::MeshMalloc:
        mesh_allocated(f, in, runtime_.malloc(args[0]), args[0]);
        return;
      case Callee::MeshCalloc:
        mesh_allocated(f, in, runtime_.calloc(args[0], args[1]), args[0] * args[1]);
        return;
      case Callee::MeshMemalign:
        mesh_allocated(f, in, runtime_.memalign(args[0], args[1]), args[1]);
        return;
      case Callee::MeshRealloc:
        mesh_realloc(f, in, TaggedPointer{args[0]}, args[1], prov[0]);
        return;
      case Callee::MeshFree:
        mesh_free(in, TaggedPointer{args[0]}, prov[0]);
        return;
    }
  }

  uint64_t nh_allocate(std::optional<uint64_t> address, uint64_t size) {
    last_object_ = kNone;
    if (!address) return 0;
    ObjectId id = shadow_.on_alloc(*address, size, RegionKind::NormalHeap, 0);
    nh_objects_[*address] = id;
    last_object_ = id;
    return *address;
  }

  void nh_release_shadow(uint64_t address) {
    auto it = nh_objects_.find(address);
    if (it == nh_objects_.end()) return;
    shadow_.on_free(it->second);
    nh_objects_.erase(it);
  }

  void mesh_allocated(Frame& f, const LInstr& in, const AllocResult& r, uint64_t size) {
    if (!r.ok()) {
      if (violation(*r.violation, in)) return;
      set(f, in.dest, 0);
      return;
    }
    if (r.pointer.is_null()) {
      set(f, in.dest, 0);
      return;
    }
    const SplitPointer s = split(r.pointer, config_.tags);
    ObjectId id = shadow_.on_alloc(s.address, size, RegionKind::SafeHeap, s.tag);
    tag_owner_[s.tag] = id;
    set(f, in.dest, r.pointer.raw(), id);
    verify_ghost_table();
  }

  void mesh_free(const LInstr& in, TaggedPointer p, int64_t prov) {
    const SplitPointer s = split(p, config_.tags);
    std::optional<ViolationKind> truth;
    if (report_.oracle) {
      truth = shadow_.check_free(provenance(prov), s.address);
      oracle_finding(truth, in);
    }
    auto v = runtime_.free(p);
    if (report_.oracle) {
      compare(provenance(prov), p, 0, v ? std::optional(v->kind) : std::nullopt, truth, in);
    }
    if (v) {
      violation(*v, in);
      return;
    }
    release_shadow(s);
    verify_ghost_table();
  }

  void release_shadow(const SplitPointer& s) {
    if (s.tag == 0) {
      nh_release_shadow(s.address);
      return;
    }
    auto it = tag_owner_.find(s.tag);
    if (it == tag_owner_.end()) return;
    shadow_.on_free(it->second);
    tag_owner_.erase(it);
  }

  void mesh_realloc(Frame& f, const LInstr& in, TaggedPointer p, uint64_t size, int64_t prov) {
    if (p.is_null()) {
      mesh_allocated(f, in, runtime_.malloc(size), size);
      return;
    }
    if (report_.oracle) oracle_finding(shadow_.check_free(provenance(prov), strip(p, config_.tags)), in);
    AllocResult r = runtime_.realloc(p, size);
    if (!r.ok()) {
      if (violation(*r.violation, in)) return;
      set(f, in.dest, 0);
      return;
    }
    if (r.pointer.is_null()) {
      set(f, in.dest, 0);
      return;
    }
    release_shadow(split(p, config_.tags));
    const SplitPointer s = split(r.pointer, config_.tags);
    if (s.tag == 0) {
      ObjectId id = shadow_.on_alloc(s.address, size, RegionKind::NormalHeap, 0);
      nh_objects_[s.address] = id;
      set(f, in.dest, r.pointer.raw(), id);
      return;
    }
    ObjectId id = shadow_.on_alloc(s.address, size, RegionKind::SafeHeap, s.tag);
    tag_owner_[s.tag] = id;
    set(f, in.dest, r.pointer.raw(), id);
    verify_ghost_table();
  }

  void verify_ghost_table() {
    if (!report_.oracle || config_.wrap) return;
    for (const auto& [tag, id] : tag_owner_) {
      const ShadowObject& o = shadow_.object(id);
      if (runtime_.row(tag) != TableRow{o.base, o.base + o.size}) ++report_.ghost_table_mismatches;
    }
  }

  void call_extern(Frame& f, const LInstr& in, const mir::ExternDecl& ext,
                   const std::vector<uint64_t>& args, const std::vector<int64_t>& prov) {
    uint64_t result = 0;
    int64_t result_prov = kNone;
    switch (ext.behavior) {
      case mir::ExternBehavior::IdentityReturn:
        break;
      case mir::ExternBehavior::NormalHeapAlloc:
        result = nh_allocate(runtime_.nh_alloc(args[0]), args[0]);
        result_prov = last_object_;
        break;
      case mir::ExternBehavior::NormalHeapFree:
        if (args[0] != 0) {
          if (!runtime_.nh_free(args[0])) {
            throw MemoryFault("external free of an address the normal heap never allocated",
                              args[0]);
          }
          nh_release_shadow(args[0]);
        }
        break;
      case mir::ExternBehavior::ByteSink: {
        std::vector<uint8_t> bytes = memory_.read_bytes(args[0], args[1]);
        for (uint8_t b : bytes) result += b;
        break;
      }
      case mir::ExternBehavior::ByteSource: {
        std::vector<uint8_t> bytes(args[1]);
        for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<uint8_t>(i);
        memory_.write_bytes(args[0], bytes);
        result = args[1];
        break;
      }
    }
    if (ext.returns_arg) {
      result = args[*ext.returns_arg];
      result_prov = prov[*ext.returns_arg];
    }
    set(f, in.dest, result, result_prov);
  }

 public:
  void set_instrumented(bool v) { instrumented_ = v; }

 private:
  const mir::Program& program_;
  const RunConfig& config_;
  AddressSpace memory_;
  Runtime runtime_;
  ShadowMap shadow_;
  ExecutionReport report_;

  std::map<std::string, uint64_t> global_addresses_;
  std::vector<LFunction> functions_;
  std::vector<Frame> frames_;
  uint64_t sp_;
  bool stopped_ = false;
  bool instrumented_ = false;

  std::unordered_map<uint64_t, int64_t> ghost_memory_;
  std::unordered_map<uint64_t, ObjectId> tag_owner_;
  std::unordered_map<uint64_t, ObjectId> nh_objects_;
  int64_t last_object_ = kNone;
};

}  // namespace

bool has_mesh_intrinsics(const mir::Program& program) {
  for (const mir::Function& f : program.functions) {
    for (const mir::Block& b : f.blocks) {
      for (const mir::Instr& in : b.instrs) {
        switch (in.op) {
          case Opcode::Check:
          case Opcode::ArgCheck:
          case Opcode::Strip:
          case Opcode::TagOf:
          case Opcode::Retag:
            return true;
          case Opcode::Call:
            if (mir::find_intrinsic(in.name)) return true;
            break;
          default:
            break;
        }
      }
    }
  }
  return false;
}

ExecutionReport execute(const mir::Program& program, const RunConfig& config) {
  Machine m(program, config);
  m.set_instrumented(has_mesh_intrinsics(program));
  return m.execute();
}

ExecutionReport run(const mir::Program& program, const RunConfig& config,
                    const InstrumentOptions& options) {
  InstrumentResult instrumented = instrument_program(program, options);
  Machine m(instrumented.program, config);
  m.set_instrumented(true);
  ExecutionReport report = m.execute();
  report.instrument_stats = instrumented.stats;
  return report;
}

ExecutionReport run_uninstrumented(const mir::Program& program, const RunConfig& config) {
  Machine m(program, config);
  m.set_instrumented(false);
  return m.execute();
}

}  // namespace mesh
