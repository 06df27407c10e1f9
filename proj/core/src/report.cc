#include <iomanip>
#include <sstream>

#include "mesh/interp.h"

namespace mesh {

namespace {

std::string hex(uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

void stats_lines(std::ostream& os, const RuntimeStats& s, const char* prefix, char sep) {
  os << prefix << "total_allocations" << sep << s.total_allocations << "\n"
     << prefix << "peak_live_objects" << sep << s.peak_live_objects << "\n"
     << prefix << "current_live" << sep << s.current_live << "\n"
     << prefix << "checks_executed" << sep << s.checks_executed << "\n"
     << prefix << "table_bytes" << sep << s.table_bytes << "\n"
     << prefix << "wraparound_reuses" << sep << s.wraparound_reuses << "\n";
}

}  // namespace

std::string format_report(const ExecutionReport& r) {
  std::ostringstream os;
  for (uint64_t v : r.outputs) os << "output: " << v << "\n";
  for (const ReportedViolation& v : r.violations) {
    os << "violation: " << to_string(v.violation.kind) << " in " << v.function
       << " at instruction " << v.instr_index << " (pointer " << hex(v.violation.pointer.raw())
       << ", tag " << v.violation.tag << ", address " << hex(v.violation.address)
       << ", size " << v.violation.access_size << ")\n";
  }
  os << "exit: " << to_string(r.exit);
  if (!r.fault_message.empty()) os << " (" << r.fault_message << ")";
  os << "\n";
  stats_lines(os, r.runtime_stats, "stats: ", ' ');
  if (r.instrument_stats) {
    const InstrumentStats& s = *r.instrument_stats;
    os << "instrument: checks_inserted " << s.checks_inserted << ", checks_elided "
       << s.checks_elided << " (" << std::fixed << std::setprecision(1)
       << s.elision_percent() << "%), external_calls_wrapped " << s.external_calls_wrapped
       << "\n";
  }
  if (r.oracle) {
    const OracleSummary& o = *r.oracle;
    os << "oracle: " << o.accesses << " accesses, " << o.agreements << " agree, "
       << o.expected_imprecision << " expected-imprecision, " << o.unexpected
       << " unexpected\n";
    for (const AccessComparison& c : o.disagreements) {
      os << "oracle-disagreement: " << c.function << " at instruction " << c.instr_index
         << ": mesh=" << (c.mesh ? to_string(*c.mesh) : "pass")
         << " oracle=" << (c.oracle ? to_string(*c.oracle) : "pass") << " -> "
         << to_string(c.agreement) << " (" << to_string(c.reason) << ")\n";
    }
  }
  return os.str();
}

std::string format_structured(const ExecutionReport& r) {
  std::ostringstream os;
  os << "exit=" << to_string(r.exit) << "\n";
  if (!r.fault_message.empty()) os << "fault=" << r.fault_message << "\n";
  if (r.return_value) os << "return_value=" << *r.return_value << "\n";
  os << "steps=" << r.steps << "\n";
  os << "outputs=";
  for (size_t i = 0; i < r.outputs.size(); ++i) os << (i ? "," : "") << r.outputs[i];
  os << "\n";
  os << "violations=" << r.violations.size() << "\n";
  for (size_t i = 0; i < r.violations.size(); ++i) {
    const ReportedViolation& v = r.violations[i];
    const std::string p = "violation." + std::to_string(i) + ".";
    os << p << "kind=" << to_string(v.violation.kind) << "\n"
       << p << "function=" << v.function << "\n"
       << p << "instr=" << v.instr_index << "\n"
       << p << "pointer=" << hex(v.violation.pointer.raw()) << "\n"
       << p << "tag=" << v.violation.tag << "\n"
       << p << "address=" << hex(v.violation.address) << "\n"
       << p << "access_size=" << v.violation.access_size << "\n"
       << p << "row_lower=" << hex(v.violation.row.lower_bound) << "\n"
       << p << "row_upper=" << hex(v.violation.row.upper_bound) << "\n";
  }
  stats_lines(os, r.runtime_stats, "stats.", '=');
  if (r.instrument_stats) {
    const InstrumentStats& s = *r.instrument_stats;
    os << "instrument.checks_inserted=" << s.checks_inserted << "\n"
       << "instrument.checks_elided=" << s.checks_elided << "\n"
       << "instrument.elision_percent=" << std::fixed << std::setprecision(3)
       << s.elision_percent() << "\n"
       << "instrument.external_calls_wrapped=" << s.external_calls_wrapped << "\n";
  }
  os << "ghost.tagged_unchecked_accesses=" << r.tagged_unchecked_accesses << "\n";
  if (r.oracle) {
    os << "oracle.accesses=" << r.oracle->accesses << "\n"
       << "oracle.agreements=" << r.oracle->agreements << "\n"
       << "oracle.expected_imprecision=" << r.oracle->expected_imprecision << "\n"
       << "oracle.unexpected=" << r.oracle->unexpected << "\n"
       << "oracle.findings=" << r.oracle_findings.size() << "\n"
       << "ghost.table_mismatches=" << r.ghost_table_mismatches << "\n";
  }
  return os.str();
}

}  // namespace mesh
