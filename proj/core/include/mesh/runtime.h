#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string_view>
#include <vector>

#include "mesh/allocator.h"
#include "mesh/sim_memory.h"
#include "mesh/tagged_ptr.h"

namespace mesh {

enum class ViolationKind {
  UseAfterFree,
  BufferOverflow,
  BufferUnderflow,
  IllegalSafeHeapAccess,
  IllegalSafeHeapFree,
  DoubleFree,
  MetadataExhaustion,
};

std::string_view to_string(ViolationKind kind);
std::optional<ViolationKind> parse_violation_kind(std::string_view name);

// One row of the metadata table. Validity is folded into the lower bound:
// an all-ones lower bound marks the row unused or freed.
struct TableRow {
  static constexpr uint64_t kAllOnes = ~uint64_t{0};

  uint64_t lower_bound = kAllOnes;
  uint64_t upper_bound = kAllOnes;

  constexpr bool valid() const { return lower_bound != kAllOnes; }
  friend constexpr bool operator==(const TableRow&, const TableRow&) = default;
};
static_assert(sizeof(TableRow) == 16);

struct Violation {
  ViolationKind kind;
  TaggedPointer pointer;
  uint64_t tag = 0;
  uint64_t address = 0;
  uint64_t access_size = 0;
  TableRow row;
};

struct RuntimeStats {
  uint64_t total_allocations = 0;
  uint64_t peak_live_objects = 0;
  uint64_t current_live = 0;
  uint64_t checks_executed = 0;
  uint64_t table_bytes = 0;
  uint64_t wraparound_reuses = 0;
};

struct RuntimeOptions {
  TagConfig tags;
  bool wrap = false;
};

// Outcome of an allocation routine. A null pointer without a violation is
// ordinary allocator exhaustion, left to the program to handle.
struct AllocResult {
  TaggedPointer pointer;
  std::optional<Violation> violation;

  bool ok() const { return !violation.has_value(); }
};

// Metadata table, safe-heap and normal-heap allocators, and the checks.
//
// Allocation routines and free are serialized by one mutex that guards the
// table index, row claiming/invalidation, and both allocators. Checks only
// read table rows and may run concurrently with each other and with
// allocations of other objects.
class Runtime {
 public:
  Runtime(AddressSpace& memory, RuntimeOptions options = {});

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  AllocResult malloc(uint64_t size);
  AllocResult calloc(uint64_t count, uint64_t size);
  AllocResult realloc(TaggedPointer p, uint64_t new_size);
  AllocResult memalign(uint64_t align, uint64_t size);
  std::optional<Violation> free(TaggedPointer p);

  // Combined temporal and spatial check: one table row, two comparisons.
  std::optional<Violation> safety_check(TaggedPointer p, uint64_t access_size) const {
    checks_.fetch_add(1, std::memory_order_relaxed);
    const SplitPointer s = split(p, options_.tags);
    if (s.tag == 0) {
      if (memory_.in_safe_heap(s.address)) {
        return make_violation(ViolationKind::IllegalSafeHeapAccess, p, s, access_size);
      }
      return std::nullopt;
    }
    const TableRow& r = table_[s.tag];
    if (s.address < r.lower_bound) {
      return make_violation(classify_violation(r, s.address), p, s, access_size);
    }
    if (s.address + access_size > r.upper_bound) {
      return make_violation(ViolationKind::BufferOverflow, p, s, access_size);
    }
    return std::nullopt;
  }

  // The separated forms. The combined check is what instrumented code calls.
  std::optional<Violation> temporal_check(TaggedPointer p) const;
  std::optional<Violation> spatial_check(TaggedPointer p, uint64_t access_size) const;

  // Validation of a pointer handed to external code: untagged values pass
  // (they may be plain integers); tagged ones must be live and within
  // [lower, upper], one-past-the-end included.
  std::optional<Violation> argument_check(TaggedPointer p) const;

  // Only meaningful for address < row.lower_bound.
  static ViolationKind classify_violation(const TableRow& row, uint64_t address) {
    (void)address;
    return row.lower_bound == TableRow::kAllOnes ? ViolationKind::UseAfterFree
                                                 : ViolationKind::BufferUnderflow;
  }

  // Cyclic downward scan for an invalid row, skipping row 0.
  std::optional<uint64_t> wraparound_find_free();

  // Normal-heap allocation on behalf of uninstrumented code; untagged.
  std::optional<uint64_t> nh_alloc(uint64_t size, uint64_t align = FreeListAllocator::kDefaultAlignment);
  bool nh_free(uint64_t address);
  std::optional<uint64_t> nh_realloc(uint64_t address, uint64_t new_size);

  RuntimeStats stats() const;
  const TableRow& row(uint64_t tag) const { return table_.at(tag); }
  uint64_t next_index() const;
  uint64_t table_bytes() const { return table_.size() * sizeof(TableRow); }
  TagConfig tags() const { return options_.tags; }
  bool wrap_enabled() const { return options_.wrap; }
  AddressSpace& memory() { return memory_; }
  const AddressSpace& memory() const { return memory_; }
  const FreeListAllocator& safe_heap() const { return safe_heap_; }
  const FreeListAllocator& normal_heap() const { return normal_heap_; }

 private:
  Violation make_violation(ViolationKind kind, TaggedPointer p, SplitPointer s,
                           uint64_t access_size) const {
    return Violation{kind, p, s.tag, s.address, access_size,
                     s.tag == 0 ? TableRow{} : table_[s.tag]};
  }

  AllocResult allocate_locked(uint64_t size, uint64_t align);
  std::optional<uint64_t> find_free_row_locked();
  std::optional<Violation> free_locked(TaggedPointer p);

  AddressSpace& memory_;
  RuntimeOptions options_;
  std::vector<TableRow> table_;

  mutable std::mutex mu_;
  uint64_t next_index_;
  uint64_t scan_position_;
  FreeListAllocator safe_heap_;
  FreeListAllocator normal_heap_;

  uint64_t total_allocations_ = 0;
  uint64_t current_live_ = 0;
  uint64_t peak_live_ = 0;
  uint64_t wraparound_reuses_ = 0;
  mutable std::atomic<uint64_t> checks_{0};
};

}  // namespace mesh
