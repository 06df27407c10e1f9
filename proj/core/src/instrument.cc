#include "mesh/instrument.h"

#include <algorithm>
#include <map>

namespace mesh {

using mir::Block;
using mir::Function;
using mir::Instr;
using mir::Opcode;

namespace {

const std::map<std::string, std::string>& runtime_routines() {
  static const std::map<std::string, std::string> routines = {
      {"malloc", "mesh.malloc"},   {"new", "mesh.malloc"},
      {"free", "mesh.free"},       {"delete", "mesh.free"},
      {"calloc", "mesh.calloc"},   {"realloc", "mesh.realloc"},
      {"memalign", "mesh.memalign"},
  };
  return routines;
}

class FreshNames {
 public:
  explicit FreshNames(const Function& fn) {
    for (const std::string& p : fn.params) taken_.insert(p);
    for (const Block& b : fn.blocks) {
      for (const Instr& in : b.instrs) {
        if (!in.dest.empty()) taken_.insert(in.dest);
      }
    }
  }

  std::string make() {
    std::string name;
    do {
      name = "%m" + std::to_string(counter_++);
    } while (taken_.count(name));
    taken_.insert(name);
    return name;
  }

 private:
  std::set<std::string> taken_;
  size_t counter_ = 0;
};

Instr intrinsic(Opcode op, std::string dest, std::vector<std::string> args,
                const mir::SourceInfo& src, unsigned width = 0) {
  Instr in;
  in.op = op;
  in.dest = std::move(dest);
  in.args = std::move(args);
  in.width = width;
  in.src = src;
  return in;
}

}  // namespace

std::set<std::string> underived_local_registers(const Function& fn) {
  std::set<std::string> safe;
  std::vector<const Instr*> phis;
  for (const Block& b : fn.blocks) {
    for (const Instr& in : b.instrs) {
      if (in.op == Opcode::Alloca || in.op == Opcode::GlobalAddr) safe.insert(in.dest);
      if (in.op == Opcode::Phi) {
        phis.push_back(&in);
        safe.insert(in.dest);
      }
    }
  }
  // Greatest fixpoint: drop any phi with a source outside the set until
  // nothing changes. Loop-carried phis survive only if every value that can
  // enter the cycle is itself an underived local.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Instr* phi : phis) {
      if (!safe.count(phi->dest)) continue;
      bool all = std::all_of(phi->incoming.begin(), phi->incoming.end(),
                             [&](const mir::PhiIncoming& inc) { return safe.count(inc.reg) > 0; });
      if (!all) {
        safe.erase(phi->dest);
        changed = true;
      }
    }
  }
  return safe;
}

std::set<SiteId> analyze_origins(const Function& fn) {
  const std::set<std::string> safe = underived_local_registers(fn);
  std::set<SiteId> sites;
  for (size_t b = 0; b < fn.blocks.size(); ++b) {
    const Block& block = fn.blocks[b];
    for (size_t i = 0; i < block.instrs.size(); ++i) {
      const Instr& in = block.instrs[i];
      if (in.is_memory_access() && safe.count(in.address_reg())) sites.insert({b, i});
    }
  }
  return sites;
}

InstrumentResult instrument_program(const mir::Program& program,
                                    const InstrumentOptions& options) {
  if (auto diags = mir::validate(program); !diags.empty()) {
    throw InstrumentError("cannot instrument an invalid program: " + diags.front().str());
  }
  if (options.allocator_names.empty()) {
    throw InstrumentError("allocator name set is empty");
  }
  for (const std::string& name : options.allocator_names) {
    if (!runtime_routines().count(name)) {
      throw InstrumentError("no runtime routine for allocator '" + name + "'");
    }
  }

  InstrumentResult result;
  result.program.globals = program.globals;
  result.program.externs = program.externs;
  InstrumentStats& stats = result.stats;

  for (const Function& fn : program.functions) {
    // With removal off, every pointer argument to an extern is wrapped too.
    const std::set<std::string> untagged = options.enable_check_removal
                                               ? underived_local_registers(fn)
                                               : std::set<std::string>{};
    const std::set<SiteId> elidable =
        options.enable_check_removal ? analyze_origins(fn) : std::set<SiteId>{};
    FreshNames fresh(fn);

    Function out;
    out.name = fn.name;
    out.params = fn.params;
    out.src = fn.src;

    for (size_t b = 0; b < fn.blocks.size(); ++b) {
      const Block& block = fn.blocks[b];
      Block nb;
      nb.label = block.label;
      nb.term = block.term;

      for (size_t i = 0; i < block.instrs.size(); ++i) {
        Instr in = block.instrs[i];

        if (in.is_memory_access()) {
          if (elidable.count({b, i})) {
            ++stats.checks_elided;
          } else {
            ++stats.checks_inserted;
            const size_t slot = in.op == Opcode::Load ? 0 : 1;
            const std::string address = in.args[slot];
            const std::string stripped = fresh.make();
            nb.instrs.push_back(intrinsic(Opcode::Check, "", {address}, in.src, in.width));
            nb.instrs.push_back(intrinsic(Opcode::Strip, stripped, {address}, in.src));
            in.args[slot] = stripped;
          }
          nb.instrs.push_back(std::move(in));
          continue;
        }

        if (in.op == Opcode::Call && options.allocator_names.count(in.name)) {
          in.name = runtime_routines().at(in.name);
          nb.instrs.push_back(std::move(in));
          continue;
        }

        const mir::ExternDecl* ext =
            in.op == Opcode::Call ? program.find_extern(in.name) : nullptr;
        if (ext == nullptr) {
          nb.instrs.push_back(std::move(in));
          continue;
        }

        std::vector<unsigned> positions = ext->pointer_params();
        std::sort(positions.begin(), positions.end());
        positions.erase(std::unique(positions.begin(), positions.end()), positions.end());

        const std::vector<std::string> original = in.args;
        std::map<std::string, std::string> stripped_of;
        std::string saved_tag;
        bool wrapped = false;
        for (unsigned k : positions) {
          const std::string& arg = original.at(k);
          if (untagged.count(arg)) continue;
          wrapped = true;
          if (ext->returns_arg == k && !in.dest.empty()) {
            saved_tag = fresh.make();
            nb.instrs.push_back(intrinsic(Opcode::TagOf, saved_tag, {arg}, in.src));
          }
          auto [it, inserted] = stripped_of.try_emplace(arg);
          if (inserted) {
            it->second = fresh.make();
            nb.instrs.push_back(intrinsic(Opcode::ArgCheck, "", {arg}, in.src));
            nb.instrs.push_back(intrinsic(Opcode::Strip, it->second, {arg}, in.src));
          }
          in.args[k] = it->second;
        }
        if (wrapped) ++stats.external_calls_wrapped;

        if (saved_tag.empty()) {
          nb.instrs.push_back(std::move(in));
        } else {
          const std::string final_dest = in.dest;
          const std::string raw_result = fresh.make();
          const mir::SourceInfo src = in.src;
          in.dest = raw_result;
          nb.instrs.push_back(std::move(in));
          nb.instrs.push_back(intrinsic(Opcode::Retag, final_dest, {saved_tag, raw_result}, src));
        }
      }
      out.blocks.push_back(std::move(nb));
    }
    result.program.functions.push_back(std::move(out));
  }
  return result;
}

}  // namespace mesh
