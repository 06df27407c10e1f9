#pragma once

#include <compare>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>

#include "mesh/mir.h"

namespace mesh {

struct InstrumentOptions {
  bool enable_check_removal = true;
  // Calls to these names are redirected to the runtime's routines.
  std::set<std::string> allocator_names = {"malloc", "free",    "calloc", "realloc",
                                           "memalign", "new", "delete"};
};

struct InstrumentStats {
  size_t checks_inserted = 0;
  size_t checks_elided = 0;
  size_t external_calls_wrapped = 0;

  double elision_percent() const {
    size_t total = checks_inserted + checks_elided;
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(checks_elided) / static_cast<double>(total);
  }
};

// Position of an instruction inside a function.
struct SiteId {
  size_t block = 0;
  size_t instr = 0;
  auto operator<=>(const SiteId&) const = default;
};

// Registers that provably hold an underived stack or global address:
// alloca/global_addr results, and phis whose every source is such a register.
std::set<std::string> underived_local_registers(const mir::Function& fn);

// Loads and stores whose address register is in underived_local_registers.
std::set<SiteId> analyze_origins(const mir::Function& fn);

class InstrumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InstrumentResult {
  mir::Program program;
  InstrumentStats stats;
};

// Inserts check/strip before every access not proven safe, redirects
// allocator calls, and wraps calls into external functions. Throws
// InstrumentError on an invalid program or an allocator name with no
// runtime routine.
InstrumentResult instrument_program(const mir::Program& program,
                                    const InstrumentOptions& options = {});

}  // namespace mesh
