#include <map>
#include <set>
#include <string>

#include "mesh/mir.h"

namespace mesh::mir {

namespace {

class Validator {
 public:
  explicit Validator(const Program& p) : program_(p) {}

  std::vector<Diagnostic> run() {
    std::set<std::string> names;
    auto claim = [&](const std::string& name, const SourceInfo& src) {
      if (find_builtin(name) || find_intrinsic(name)) {
        report(src, "'" + name + "' is a reserved allocator name");
      } else if (!names.insert(name).second) {
        report(src, "duplicate name '" + name + "'");
      }
    };
    for (const Global& g : program_.globals) claim(g.name, g.src);
    for (const ExternDecl& e : program_.externs) {
      claim(e.name, e.src);
      check_extern(e);
    }
    for (const Function& f : program_.functions) claim(f.name, f.src);
    for (const Function& f : program_.functions) check_function(f);
    return std::move(diags_);
  }

 private:
  void report(const SourceInfo& src, std::string msg) {
    diags_.push_back({src.line, src.column, std::move(msg)});
  }

  void check_extern(const ExternDecl& e) {
    if (e.returns_arg && *e.returns_arg >= e.param_count) {
      report(e.src, "extern '" + e.name + "': returns_arg out of range");
    }
    unsigned needed = 0;
    switch (e.behavior) {
      case ExternBehavior::IdentityReturn:
        if (!e.returns_arg) report(e.src, "extern '" + e.name + "': identity_return needs returns_arg");
        break;
      case ExternBehavior::NormalHeapAlloc:
      case ExternBehavior::NormalHeapFree:
        needed = 1;
        break;
      case ExternBehavior::ByteSink:
      case ExternBehavior::ByteSource:
        needed = 2;
        break;
    }
    if (e.param_count < needed) {
      report(e.src, "extern '" + e.name + "': behavior " +
                        std::string(to_string(e.behavior)) + " needs " +
                        std::to_string(needed) + " parameters");
    }
  }

  void check_function(const Function& f) {
    std::set<std::string> labels;
    for (const Block& b : f.blocks) {
      if (!labels.insert(b.label).second) {
        report(b.term.src, "duplicate block label '" + b.label + "' in " + f.name);
      }
    }

    std::map<std::string, std::set<std::string>> preds;
    for (const Block& b : f.blocks) {
      for (const std::string& t : b.term.targets) {
        if (!labels.count(t)) {
          report(b.term.src, "unknown branch target '" + t + "'");
        } else {
          preds[t].insert(b.label);
        }
      }
    }

    std::set<std::string> defs;
    auto define = [&](const std::string& reg, const SourceInfo& src) {
      if (!defs.insert(reg).second) report(src, "register '" + reg + "' assigned twice");
    };
    for (const std::string& p : f.params) define(p, f.src);
    for (const Block& b : f.blocks) {
      for (const Instr& in : b.instrs) {
        if (!in.dest.empty()) define(in.dest, in.src);
      }
    }

    auto use = [&](const std::string& reg, const SourceInfo& src) {
      if (!defs.count(reg)) report(src, "unknown register '" + reg + "'");
    };

    for (const Block& b : f.blocks) {
      bool past_phis = false;
      for (const Instr& in : b.instrs) {
        for (const std::string& a : in.args) use(a, in.src);
        if (in.op == Opcode::Phi) {
          if (past_phis) report(in.src, "phi after a non-phi instruction");
          std::set<std::string> seen;
          for (const PhiIncoming& inc : in.incoming) {
            use(inc.reg, in.src);
            if (!preds[b.label].count(inc.label)) {
              report(in.src, "phi label '" + inc.label + "' is not a predecessor of '" +
                                 b.label + "'");
            }
            if (!seen.insert(inc.label).second) {
              report(in.src, "phi lists '" + inc.label + "' twice");
            }
          }
        } else {
          past_phis = true;
        }
        if (in.op == Opcode::GlobalAddr && !program_.find_global(in.name)) {
          report(in.src, "unknown global '" + in.name + "'");
        }
        if (in.op == Opcode::Call) check_call(in);
      }
      if (b.term.kind == TermKind::CondBr) use(b.term.cond, b.term.src);
      if (b.term.value) use(*b.term.value, b.term.src);
    }
  }

  void check_call(const Instr& in) {
    size_t expected = 0;
    if (const Function* f = program_.find_function(in.name)) {
      expected = f->params.size();
    } else if (const ExternDecl* e = program_.find_extern(in.name)) {
      expected = e->param_count;
    } else if (auto b = find_builtin(in.name)) {
      expected = b->params;
    } else if (auto i = find_intrinsic(in.name)) {
      expected = i->params;
    } else {
      report(in.src, "call to undeclared function '" + in.name + "'");
      return;
    }
    if (in.args.size() != expected) {
      report(in.src, "call to '" + in.name + "' passes " + std::to_string(in.args.size()) +
                         " arguments, expected " + std::to_string(expected));
    }
  }

  const Program& program_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

std::vector<Diagnostic> validate(const Program& program) {
  return Validator(program).run();
}

}  // namespace mesh::mir
