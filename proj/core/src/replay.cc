#include "mesh/replay.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <iomanip>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace mesh {

namespace {

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
T number(std::string_view s, int line, const char* what) {
  T value{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw TraceError(line, std::string("malformed ") + what + " '" + std::string(s) + "'");
  }
  return value;
}

struct Counters {
  std::array<uint64_t, 7> violations{};
  uint64_t null_allocations = 0;
  uint64_t checks = 0;
  uint64_t check_nanos = 0;
  std::vector<uint64_t> tags;
};

void run_stream(Runtime& runtime, const std::vector<const TraceRecord*>& records, Counters& out) {
  std::unordered_map<uint64_t, TaggedPointer> bound;
  std::vector<std::pair<TaggedPointer, uint64_t>> batch;
  const TagConfig tags = runtime.tags();

  for (size_t i = 0; i < records.size();) {
    const TraceRecord& r = *records[i];
    if (r.kind == TraceRecord::Kind::Check) {
      batch.clear();
      for (; i < records.size() && records[i]->kind == TraceRecord::Kind::Check; ++i) {
        const TraceRecord& c = *records[i];
        batch.emplace_back(ptr_add(bound[c.id], c.offset), c.size);
      }
      std::array<uint64_t, 7> found{};
      const auto start = std::chrono::steady_clock::now();
      for (const auto& [p, size] : batch) {
        if (auto v = runtime.safety_check(p, size)) ++found[static_cast<size_t>(v->kind)];
      }
      const auto stop = std::chrono::steady_clock::now();
      out.check_nanos += static_cast<uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
      out.checks += batch.size();
      for (size_t k = 0; k < found.size(); ++k) out.violations[k] += found[k];
      continue;
    }
    if (r.kind == TraceRecord::Kind::Alloc) {
      AllocResult a = runtime.malloc(r.size);
      if (!a.ok()) {
        ++out.violations[static_cast<size_t>(a.violation->kind)];
      } else if (a.pointer.is_null()) {
        ++out.null_allocations;
      } else {
        out.tags.push_back(tag_of(a.pointer, tags));
      }
      bound[r.id] = a.pointer;
    } else {
      if (auto v = runtime.free(bound[r.id])) ++out.violations[static_cast<size_t>(v->kind)];
    }
    ++i;
  }
}

}  // namespace

Trace parse_trace(std::string_view text) {
  Trace trace;
  std::unordered_set<uint64_t> known;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto f = fields(line);
    if (f.empty()) continue;

    TraceRecord r;
    r.line = line_no;
    if (f[0] == "A" && f.size() == 3) {
      r.kind = TraceRecord::Kind::Alloc;
      r.id = number<uint64_t>(f[1], line_no, "id");
      r.size = number<uint64_t>(f[2], line_no, "size");
      known.insert(r.id);
    } else if (f[0] == "F" && f.size() == 2) {
      r.kind = TraceRecord::Kind::Free;
      r.id = number<uint64_t>(f[1], line_no, "id");
    } else if (f[0] == "C" && f.size() == 4) {
      r.kind = TraceRecord::Kind::Check;
      r.id = number<uint64_t>(f[1], line_no, "id");
      r.offset = number<int64_t>(f[2], line_no, "offset");
      r.size = number<uint64_t>(f[3], line_no, "size");
    } else {
      throw TraceError(line_no, "expected 'A <id> <size>', 'F <id>' or 'C <id> <offset> <size>'");
    }
    if (r.kind != TraceRecord::Kind::Alloc && !known.count(r.id)) {
      throw TraceError(line_no, "id " + std::to_string(r.id) + " used before allocation");
    }
    trace.records.push_back(r);
    if (nl == text.size()) break;
  }
  return trace;
}

std::string print_trace(const Trace& trace) {
  std::ostringstream os;
  for (const TraceRecord& r : trace.records) {
    switch (r.kind) {
      case TraceRecord::Kind::Alloc: os << "A " << r.id << " " << r.size << "\n"; break;
      case TraceRecord::Kind::Free: os << "F " << r.id << "\n"; break;
      case TraceRecord::Kind::Check:
        os << "C " << r.id << " " << r.offset << " " << r.size << "\n";
        break;
    }
  }
  return os.str();
}

ReplayReport replay(const Trace& trace, const ReplayConfig& config) {
  MemoryLayout layout;
  layout.safe_heap_size = config.safe_heap_size;
  AddressSpace memory(layout);
  Runtime runtime(memory, RuntimeOptions{config.tags, config.wrap});

  const unsigned n = std::max(1u, config.threads);
  std::vector<std::vector<const TraceRecord*>> streams(n);
  for (const TraceRecord& r : trace.records) streams[r.id % n].push_back(&r);

  std::vector<Counters> counters(n);
  if (n == 1) {
    run_stream(runtime, streams[0], counters[0]);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(n);
    for (unsigned t = 0; t < n; ++t) {
      workers.emplace_back([&, t] { run_stream(runtime, streams[t], counters[t]); });
    }
    for (std::thread& w : workers) w.join();
  }

  ReplayReport report;
  report.stats = runtime.stats();
  report.max_tag = config.tags.max_tag();
  for (const Counters& c : counters) {
    for (size_t k = 0; k < c.violations.size(); ++k) report.violations[k] += c.violations[k];
    report.null_allocations += c.null_allocations;
    report.checks += c.checks;
    report.check_nanos += c.check_nanos;
    report.tags.insert(report.tags.end(), c.tags.begin(), c.tags.end());
  }
  report.distinct_tags = std::unordered_set<uint64_t>(report.tags.begin(), report.tags.end()).size();
  return report;
}

std::string format_replay(const ReplayReport& r) {
  std::ostringstream os;
  os << "total_allocations=" << r.stats.total_allocations << "\n"
     << "peak_live_objects=" << r.stats.peak_live_objects << "\n"
     << "current_live=" << r.stats.current_live << "\n"
     << "table_bytes=" << r.stats.table_bytes << "\n"
     << "max_live_objects=" << r.max_tag << "\n"
     << "utilization=" << std::fixed << std::setprecision(3) << 100.0 * r.utilization() << "%\n"
     << "wraparound_reuses=" << r.stats.wraparound_reuses << "\n"
     << "distinct_tags=" << r.distinct_tags << "\n"
     << "null_allocations=" << r.null_allocations << "\n"
     << "checks=" << r.checks << "\n"
     << "mean_check_ns=" << std::setprecision(2) << r.mean_check_ns() << "\n";
  for (size_t k = 0; k < r.violations.size(); ++k) {
    os << "violations." << to_string(static_cast<ViolationKind>(k)) << "=" << r.violations[k]
       << "\n";
  }
  return os.str();
}

}  // namespace mesh
