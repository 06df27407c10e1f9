#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mesh/instrument.h"
#include "mesh/mir.h"
#include "mesh/oracle.h"
#include "mesh/runtime.h"

namespace mesh {

struct RunConfig {
  TagConfig tags;
  bool wrap = false;
  uint64_t safe_heap_size = 16ull << 20;
  bool abort_on_violation = true;
  uint64_t step_limit = 100'000'000;
  // Attach the shadow oracle and compare every access against it.
  bool oracle = false;
};

enum class ExitKind { Normal, AbortedOnViolation, Fault };

std::string_view to_string(ExitKind kind);

struct ReportedViolation {
  Violation violation;
  std::string function;
  int instr_index = -1;
};

// Oracle verdict on an access that actually happened (or was attempted).
struct OracleFinding {
  ViolationKind kind;
  std::string function;
  int instr_index = -1;
};

struct ExecutionReport {
  std::vector<uint64_t> outputs;
  std::vector<ReportedViolation> violations;
  RuntimeStats runtime_stats;
  std::optional<InstrumentStats> instrument_stats;
  ExitKind exit = ExitKind::Normal;
  std::string fault_message;
  std::optional<uint64_t> return_value;
  uint64_t steps = 0;

  // Ghost assertion: loads/stores executed without a preceding check whose
  // address value carried a nonzero tag. Zero for a sound instrumentation.
  uint64_t tagged_unchecked_accesses = 0;
  // Live safe-heap objects whose table row disagreed with the shadow bounds.
  uint64_t ghost_table_mismatches = 0;

  std::optional<OracleSummary> oracle;
  std::vector<OracleFinding> oracle_findings;
};

// True if the program already carries checks, strips or mesh.* calls.
bool has_mesh_intrinsics(const mir::Program& program);

// Interprets `program` as given. mesh.* routines and check/strip/retag are
// served by a fresh Runtime; plain allocator calls go to the normal heap.
// Throws mir::ParseError if the program is invalid or has no `main`.
ExecutionReport execute(const mir::Program& program, const RunConfig& config);

// Instruments, then executes. The report carries the instrumentation stats.
ExecutionReport run(const mir::Program& program, const RunConfig& config,
                    const InstrumentOptions& options = {});

// Executes without instrumentation: no checks, every allocation on the
// normal heap.
ExecutionReport run_uninstrumented(const mir::Program& program, const RunConfig& config);

// Human-readable, line-oriented report.
std::string format_report(const ExecutionReport& report);
// Flat key=value lines with a violation.N.* group per violation.
std::string format_structured(const ExecutionReport& report);

}  // namespace mesh
