#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mesh/runtime.h"

namespace mesh {

// Line-oriented allocation trace:
//   A <id> <size>              allocate, bind result to id
//   F <id>                     free the pointer bound to id
//   C <id> <offset> <size>     safety check of (pointer + offset, size)
//   # comment
struct TraceRecord {
  enum class Kind { Alloc, Free, Check };
  Kind kind = Kind::Alloc;
  uint64_t id = 0;
  uint64_t size = 0;
  int64_t offset = 0;
  int line = 0;
};

struct Trace {
  std::vector<TraceRecord> records;
};

class TraceError : public std::runtime_error {
 public:
  TraceError(int line, const std::string& what)
      : std::runtime_error(std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

Trace parse_trace(std::string_view text);
std::string print_trace(const Trace& trace);

struct ReplayConfig {
  TagConfig tags;
  bool wrap = false;
  uint64_t safe_heap_size = 16ull << 20;
  // Records are partitioned by id across this many threads.
  unsigned threads = 1;
};

struct ReplayReport {
  RuntimeStats stats;
  uint64_t max_tag = 0;
  uint64_t null_allocations = 0;
  // Violations by kind, indexed by ViolationKind.
  std::array<uint64_t, 7> violations{};
  uint64_t checks = 0;
  uint64_t check_nanos = 0;
  std::vector<uint64_t> tags;  // tag of every successful allocation
  uint64_t distinct_tags = 0;

  uint64_t violation_count(ViolationKind k) const { return violations[static_cast<size_t>(k)]; }
  double mean_check_ns() const {
    return checks == 0 ? 0.0 : static_cast<double>(check_nanos) / static_cast<double>(checks);
  }
  // Peak simultaneously live objects over usable table rows.
  double utilization() const {
    return max_tag == 0 ? 0.0
                        : static_cast<double>(stats.peak_live_objects) / static_cast<double>(max_tag);
  }
};

// Drives the runtime directly, without any IR.
ReplayReport replay(const Trace& trace, const ReplayConfig& config);

std::string format_replay(const ReplayReport& report);

}  // namespace mesh
