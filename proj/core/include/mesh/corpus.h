#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mesh/interp.h"

namespace mesh {

// Sidecar `<fixture>.expect` next to each `<fixture>.mir`, key=value lines:
//   kind=<ViolationKind>|none   first reported violation
//   function=<name>             function of that violation
//   instr=<index>               source instruction index of that violation
//   outputs=<v,v,...>           printed values, in order
//   exit=normal|aborted-on-violation|fault
//   tag_bits=<N>  wrap=0|1      run configuration
struct Expectation {
  bool expects_kind = false;
  std::optional<ViolationKind> kind;
  std::optional<std::string> function;
  std::optional<int> instr;
  std::optional<std::vector<uint64_t>> outputs;
  std::optional<ExitKind> exit;
  unsigned tag_bits = TagConfig::kDefaultTagBits;
  bool wrap = false;
};

// Throws std::invalid_argument on unknown keys or malformed values.
Expectation parse_expectation(std::string_view text);

struct CorpusOptions {
  bool oracle = false;
  bool no_opt = false;
  uint64_t safe_heap_size = 16ull << 20;
};

struct FixtureResult {
  std::string name;
  bool pass = false;
  std::string detail;
  ExecutionReport report;
};

RunConfig fixture_config(const Expectation& e, const CorpusOptions& options);

// Runs one fixture (instrumented) and compares against its expectation.
FixtureResult run_fixture(const std::filesystem::path& mir_path, const CorpusOptions& options);

// Every *.mir in `dir` that has an .expect sidecar, sorted by name.
std::vector<FixtureResult> run_corpus(const std::filesystem::path& dir,
                                      const CorpusOptions& options);

std::string read_file(const std::filesystem::path& path);

}  // namespace mesh
