#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "mesh/corpus.h"
#include "mesh/errors.h"
#include "mesh/instrument.h"
#include "mesh/interp.h"
#include "mesh/mir.h"
#include "mesh/replay.h"

namespace {

// Stable exit-code contract.
constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kInputError = 2;
constexpr int kFault = 3;

struct Options {
  std::string input;
  std::string out;
  unsigned tag_bits = mesh::TagConfig::kDefaultTagBits;
  bool wrap = false;
  bool no_opt = false;
  bool oracle = false;
  uint64_t safe_heap_size = 16ull << 20;
  unsigned threads = 1;
};

bool write_output(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "meshtool: cannot write " << path << "\n";
    return false;
  }
  out << text;
  return static_cast<bool>(out);
}

std::optional<mesh::mir::Program> load_program(const std::string& path) {
  std::string text;
  try {
    text = mesh::read_file(path);
  } catch (const std::exception& e) {
    std::cerr << "meshtool: " << e.what() << "\n";
    return std::nullopt;
  }
  try {
    return mesh::mir::parse(text);
  } catch (const mesh::mir::ParseError& e) {
    std::cerr << path << ":" << e.what() << "\n";
    return std::nullopt;
  }
}

int cmd_instrument(const Options& o) {
  auto program = load_program(o.input);
  if (!program) return kInputError;

  mesh::InstrumentOptions iopt;
  iopt.enable_check_removal = !o.no_opt;
  mesh::InstrumentResult result;
  try {
    result = mesh::instrument_program(*program, iopt);
  } catch (const mesh::InstrumentError& e) {
    std::cerr << o.input << ": " << e.what() << "\n";
    return kInputError;
  }

  std::ostringstream os;
  os << mesh::mir::print(result.program);
  os << "; checks_inserted = " << result.stats.checks_inserted << "\n"
     << "; checks_elided = " << result.stats.checks_elided << "\n"
     << "; elision_percent = " << std::fixed << std::setprecision(1)
     << result.stats.elision_percent() << "\n"
     << "; external_calls_wrapped = " << result.stats.external_calls_wrapped << "\n";

  if (o.out.empty()) {
    std::cout << os.str();
  } else if (!write_output(o.out, os.str())) {
    return kInputError;
  }
  return kOk;
}

mesh::RunConfig run_config(const Options& o) {
  mesh::RunConfig config;
  config.tags = mesh::TagConfig(o.tag_bits);
  config.wrap = o.wrap;
  config.safe_heap_size = o.safe_heap_size;
  config.oracle = o.oracle;
  return config;
}

int exit_code(const mesh::ExecutionReport& report) {
  switch (report.exit) {
    case mesh::ExitKind::Normal: return report.violations.empty() ? kOk : kViolation;
    case mesh::ExitKind::AbortedOnViolation: return kViolation;
    case mesh::ExitKind::Fault: return kFault;
  }
  return kFault;
}

int cmd_run(const Options& o) {
  auto program = load_program(o.input);
  if (!program) return kInputError;

  mesh::InstrumentOptions iopt;
  iopt.enable_check_removal = !o.no_opt;
  mesh::ExecutionReport report;
  try {
    // Output of `instrument` runs as-is; instrumenting it twice would check
    // stripped addresses.
    report = mesh::has_mesh_intrinsics(*program) ? mesh::execute(*program, run_config(o))
                                                 : mesh::run(*program, run_config(o), iopt);
  } catch (const mesh::mir::ParseError& e) {
    std::cerr << o.input << ":" << e.what() << "\n";
    return kInputError;
  } catch (const mesh::InstrumentError& e) {
    std::cerr << o.input << ": " << e.what() << "\n";
    return kInputError;
  }

  std::cout << mesh::format_report(report);
  if (!o.out.empty() && !write_output(o.out, mesh::format_structured(report))) return kInputError;
  return exit_code(report);
}

int cmd_corpus(const Options& o) {
  if (!std::filesystem::is_directory(o.input)) {
    std::cerr << "meshtool: not a directory: " << o.input << "\n";
    return kInputError;
  }
  mesh::CorpusOptions copt;
  copt.oracle = o.oracle;
  copt.no_opt = o.no_opt;
  copt.safe_heap_size = o.safe_heap_size;
  const auto results = mesh::run_corpus(o.input, copt);

  size_t width = 7;
  for (const auto& r : results) width = std::max(width, r.name.size());

  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "fixture" << "  result  "
     << std::setw(22) << "violation";
  if (o.oracle) os << std::setw(10) << "oracle";
  os << "detail\n";

  size_t failed = 0;
  for (const auto& r : results) {
    std::string violation = "-";
    if (!r.report.violations.empty()) {
      violation = std::string(mesh::to_string(r.report.violations.front().violation.kind));
    }
    os << std::setw(static_cast<int>(width)) << r.name << "  " << std::setw(6)
       << (r.pass ? "pass" : "FAIL") << "  " << std::setw(22) << violation;
    if (o.oracle) {
      std::string agreement = "-";
      if (r.report.oracle) {
        std::ostringstream a;
        a << std::fixed << std::setprecision(1) << r.report.oracle->agreement_percent() << "%";
        agreement = a.str();
      }
      os << std::setw(10) << agreement;
    }
    os << r.detail << "\n";
    if (!r.pass) ++failed;
  }
  os << results.size() - failed << "/" << results.size() << " fixtures passed\n";

  std::cout << os.str();
  if (!o.out.empty() && !write_output(o.out, os.str())) return kInputError;
  return failed == 0 && !results.empty() ? kOk : kViolation;
}

std::optional<mesh::Trace> load_trace(const std::string& path) {
  try {
    return mesh::parse_trace(mesh::read_file(path));
  } catch (const mesh::TraceError& e) {
    std::cerr << path << ":" << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "meshtool: " << e.what() << "\n";
  }
  return std::nullopt;
}

int cmd_replay(const Options& o) {
  auto trace = load_trace(o.input);
  if (!trace) return kInputError;

  mesh::ReplayConfig config;
  config.tags = mesh::TagConfig(o.tag_bits);
  config.wrap = o.wrap;
  config.safe_heap_size = o.safe_heap_size;
  config.threads = o.threads;
  mesh::ReplayReport report;
  try {
    report = mesh::replay(*trace, config);
  } catch (const mesh::SimulatorFault& e) {
    std::cerr << "meshtool: " << e.what() << "\n";
    return kFault;
  }

  const std::string text = mesh::format_replay(report);
  std::cout << text;
  if (!o.out.empty() && !write_output(o.out, text)) return kInputError;
  uint64_t violations = 0;
  for (uint64_t v : report.violations) violations += v;
  return violations == 0 ? kOk : kViolation;
}

int cmd_stats(const Options& o) {
  const mesh::TagConfig tags(o.tag_bits);
  std::ostringstream os;
  os << "tag_bits = " << tags.tag_bits() << "\n"
     << "address_bits = " << tags.address_bits() << "\n"
     << "table_rows = " << tags.table_rows() << "\n"
     << "max_live_objects = " << tags.max_tag() << "\n"
     << "table_bytes = " << tags.table_rows() * sizeof(mesh::TableRow) << "\n";

  int code = kOk;
  if (!o.input.empty()) {
    if (std::filesystem::path(o.input).extension() == ".trace") {
      auto trace = load_trace(o.input);
      if (!trace) return kInputError;
      mesh::ReplayConfig config;
      config.tags = tags;
      config.wrap = o.wrap;
      config.safe_heap_size = o.safe_heap_size;
      const mesh::ReplayReport r = mesh::replay(*trace, config);
      os << "total_allocations = " << r.stats.total_allocations << "\n"
         << "peak_live_objects = " << r.stats.peak_live_objects << "\n"
         << "utilization = " << std::fixed << std::setprecision(3) << 100.0 * r.utilization()
         << "%\n"
         << "workload_table_bytes = " << r.stats.table_bytes << "\n";
    } else {
      auto program = load_program(o.input);
      if (!program) return kInputError;
      mesh::InstrumentOptions iopt;
      iopt.enable_check_removal = !o.no_opt;
      mesh::ExecutionReport r;
      try {
        r = mesh::run(*program, run_config(o), iopt);
      } catch (const std::exception& e) {
        std::cerr << o.input << ": " << e.what() << "\n";
        return kInputError;
      }
      os << "total_allocations = " << r.runtime_stats.total_allocations << "\n"
         << "peak_live_objects = " << r.runtime_stats.peak_live_objects << "\n"
         << "checks_executed = " << r.runtime_stats.checks_executed << "\n"
         << "workload_table_bytes = " << r.runtime_stats.table_bytes << "\n";
      if (r.instrument_stats) {
        os << "checks_inserted = " << r.instrument_stats->checks_inserted << "\n"
           << "checks_elided = " << r.instrument_stats->checks_elided << "\n";
      }
      code = r.exit == mesh::ExitKind::Fault ? kFault : kOk;
    }
  }
  std::cout << os.str();
  if (!o.out.empty() && !write_output(o.out, os.str())) return kInputError;
  return code;
}

void add_tag_bits(CLI::App* cmd, Options& o) {
  cmd->add_option("--tag-bits", o.tag_bits, "pointer tag width in bits")
      ->check(CLI::Range(1u, 17u));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MESH memory-safe heap simulator"};
  app.require_subcommand(1);
  Options o;

  auto* instrument = app.add_subcommand("instrument", "print the instrumented IR and check statistics");
  instrument->add_option("input", o.input, "mini-IR file")->required();
  instrument->add_flag("--no-opt", o.no_opt, "disable check removal");
  instrument->add_option("--out", o.out, "write the IR here instead of stdout");

  auto* run = app.add_subcommand("run", "instrument and execute a mini-IR program");
  run->add_option("input", o.input, "mini-IR file")->required();
  add_tag_bits(run, o);
  run->add_flag("--wrap", o.wrap, "reuse invalidated table rows on exhaustion");
  run->add_flag("--no-opt", o.no_opt, "disable check removal");
  run->add_flag("--oracle", o.oracle, "compare every access against the shadow oracle");
  run->add_option("--safe-heap-size", o.safe_heap_size, "safe heap size in bytes");
  run->add_option("--out", o.out, "write a key=value report here");

  auto* corpus = app.add_subcommand("corpus", "run every fixture in a directory");
  corpus->add_option("dir", o.input, "fixture directory")->required();
  corpus->add_flag("--oracle", o.oracle, "add the oracle agreement column");
  corpus->add_flag("--no-opt", o.no_opt, "disable check removal");
  corpus->add_option("--safe-heap-size", o.safe_heap_size, "safe heap size in bytes");
  corpus->add_option("--out", o.out, "write the table here as well");

  auto* replay = app.add_subcommand("replay", "drive the runtime from an allocation trace");
  replay->add_option("trace", o.input, "trace file")->required();
  add_tag_bits(replay, o);
  replay->add_flag("--wrap", o.wrap, "reuse invalidated table rows on exhaustion");
  replay->add_option("--threads", o.threads, "replay partitioned by id over N threads")
      ->check(CLI::Range(1u, 256u));
  replay->add_option("--safe-heap-size", o.safe_heap_size, "safe heap size in bytes");
  replay->add_option("--out", o.out, "write the report here as well");

  auto* stats = app.add_subcommand("stats", "print table geometry and workload statistics");
  stats->add_option("input", o.input, "optional mini-IR program or .trace file");
  add_tag_bits(stats, o);
  stats->add_flag("--wrap", o.wrap, "reuse invalidated table rows on exhaustion");
  stats->add_flag("--no-opt", o.no_opt, "disable check removal");
  stats->add_option("--safe-heap-size", o.safe_heap_size, "safe heap size in bytes");
  stats->add_option("--out", o.out, "write the statistics here as well");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*instrument) return cmd_instrument(o);
    if (*run) return cmd_run(o);
    if (*corpus) return cmd_corpus(o);
    if (*replay) return cmd_replay(o);
    if (*stats) return cmd_stats(o);
  } catch (const mesh::SimulatorFault& e) {
    std::cerr << "meshtool: " << e.what() << "\n";
    return kFault;
  } catch (const std::exception& e) {
    std::cerr << "meshtool: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
