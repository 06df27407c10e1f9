#include "mesh/runtime.h"

#include <algorithm>
#include <array>
#include <bit>

#include "mesh/errors.h"

namespace mesh {

namespace {

constexpr std::array<std::string_view, 7> kKindNames = {
    "UseAfterFree",          "BufferOverflow",      "BufferUnderflow",
    "IllegalSafeHeapAccess", "IllegalSafeHeapFree", "DoubleFree",
    "MetadataExhaustion",
};

}  // namespace

std::string_view to_string(ViolationKind kind) {
  return kKindNames[static_cast<size_t>(kind)];
}

std::optional<ViolationKind> parse_violation_kind(std::string_view name) {
  for (size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<ViolationKind>(i);
  }
  return std::nullopt;
}

Runtime::Runtime(AddressSpace& memory, RuntimeOptions options)
    : memory_(memory),
      options_(options),
      table_(options.tags.table_rows()),
      next_index_(options.tags.max_tag()),
      scan_position_(options.tags.max_tag()),
      safe_heap_(memory.region(RegionKind::SafeHeap).base(),
                 memory.region(RegionKind::SafeHeap).size()),
      normal_heap_(memory.region(RegionKind::NormalHeap).base(),
                   memory.region(RegionKind::NormalHeap).size()) {}

std::optional<uint64_t> Runtime::find_free_row_locked() {
  const uint64_t max = options_.tags.max_tag();
  uint64_t i = scan_position_;
  for (uint64_t step = 0; step < max; ++step) {
    if (!table_[i].valid()) {
      scan_position_ = i == 1 ? max : i - 1;
      return i;
    }
    i = i == 1 ? max : i - 1;
  }
  return std::nullopt;
}

std::optional<uint64_t> Runtime::wraparound_find_free() {
  std::lock_guard lock(mu_);
  return find_free_row_locked();
}

AllocResult Runtime::allocate_locked(uint64_t size, uint64_t align) {
  // Claim the row before touching the allocator so exhaustion never leaks a
  // safe-heap block.
  uint64_t index = 0;
  bool reused = false;
  if (next_index_ != 0) {
    index = next_index_--;
  } else if (options_.wrap) {
    auto found = find_free_row_locked();
    if (!found) {
      return {TaggedPointer{}, Violation{ViolationKind::MetadataExhaustion,
                                         TaggedPointer{}, 0, 0, size, TableRow{}}};
    }
    index = *found;
    reused = true;
  } else {
    return {TaggedPointer{}, Violation{ViolationKind::MetadataExhaustion,
                                       TaggedPointer{}, 0, 0, size, TableRow{}}};
  }

  auto address = safe_heap_.allocate(size, align);
  if (!address) {
    if (!reused) ++next_index_;
    return {TaggedPointer{}, std::nullopt};
  }

  table_[index] = TableRow{*address, *address + size};
  ++total_allocations_;
  if (reused) ++wraparound_reuses_;
  peak_live_ = std::max(peak_live_, ++current_live_);
  return {apply_tag(*address, index, options_.tags), std::nullopt};
}

AllocResult Runtime::malloc(uint64_t size) {
  std::lock_guard lock(mu_);
  return allocate_locked(size, FreeListAllocator::kDefaultAlignment);
}

AllocResult Runtime::memalign(uint64_t align, uint64_t size) {
  if (align == 0 || !std::has_single_bit(align)) return {};
  std::lock_guard lock(mu_);
  return allocate_locked(size, std::max(align, FreeListAllocator::kDefaultAlignment));
}

AllocResult Runtime::calloc(uint64_t count, uint64_t size) {
  uint64_t total = 0;
  if (__builtin_mul_overflow(count, size, &total)) return {};
  std::lock_guard lock(mu_);
  AllocResult r = allocate_locked(total, FreeListAllocator::kDefaultAlignment);
  if (r.ok() && !r.pointer.is_null()) {
    memory_.fill(strip(r.pointer, options_.tags), total, 0);
  }
  return r;
}

AllocResult Runtime::realloc(TaggedPointer p, uint64_t new_size) {
  if (p.is_null()) return malloc(new_size);

  const SplitPointer s = split(p, options_.tags);
  std::lock_guard lock(mu_);
  if (s.tag == 0) {
    if (memory_.in_safe_heap(s.address)) {
      return {TaggedPointer{}, Violation{ViolationKind::IllegalSafeHeapFree, p, 0,
                                         s.address, 0, TableRow{}}};
    }
    auto old_size = normal_heap_.block_size(s.address);
    if (!old_size) throw MemoryFault("realloc of an unknown normal-heap block", s.address);
    auto fresh = normal_heap_.allocate(new_size);
    if (!fresh) return {};
    memory_.copy(*fresh, s.address, std::min(*old_size, new_size));
    normal_heap_.release(s.address);
    return {TaggedPointer{*fresh}, std::nullopt};
  }

  const TableRow old = table_[s.tag];
  if (!old.valid()) {
    return {TaggedPointer{}, Violation{ViolationKind::DoubleFree, p, s.tag,
                                       s.address, 0, old}};
  }
  AllocResult fresh = allocate_locked(new_size, FreeListAllocator::kDefaultAlignment);
  if (!fresh.ok() || fresh.pointer.is_null()) return fresh;
  memory_.copy(strip(fresh.pointer, options_.tags), old.lower_bound,
               std::min(old.upper_bound - old.lower_bound, new_size));
  if (auto v = free_locked(p)) return {TaggedPointer{}, v};
  return fresh;
}

std::optional<Violation> Runtime::free_locked(TaggedPointer p) {
  const SplitPointer s = split(p, options_.tags);
  if (s.tag == 0) {
    if (memory_.in_safe_heap(s.address)) {
      return Violation{ViolationKind::IllegalSafeHeapFree, p, 0, s.address, 0, TableRow{}};
    }
    if (!normal_heap_.release(s.address)) {
      throw MemoryFault("free of an address the normal heap never allocated", s.address);
    }
    return std::nullopt;
  }
  TableRow& r = table_[s.tag];
  if (!r.valid()) {
    return Violation{ViolationKind::DoubleFree, p, s.tag, s.address, 0, r};
  }
  r = TableRow{};
  --current_live_;
  if (!safe_heap_.release(s.address)) {
    throw InternalFault("safe-heap release of an address that is not a block start");
  }
  return std::nullopt;
}

std::optional<Violation> Runtime::free(TaggedPointer p) {
  std::lock_guard lock(mu_);
  return free_locked(p);
}

std::optional<Violation> Runtime::temporal_check(TaggedPointer p) const {
  checks_.fetch_add(1, std::memory_order_relaxed);
  const SplitPointer s = split(p, options_.tags);
  if (s.tag == 0) return std::nullopt;
  if (!table_[s.tag].valid()) {
    return make_violation(ViolationKind::UseAfterFree, p, s, 0);
  }
  return std::nullopt;
}

std::optional<Violation> Runtime::spatial_check(TaggedPointer p, uint64_t access_size) const {
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
    return make_violation(ViolationKind::BufferUnderflow, p, s, access_size);
  }
  if (s.address + access_size > r.upper_bound) {
    return make_violation(ViolationKind::BufferOverflow, p, s, access_size);
  }
  return std::nullopt;
}

std::optional<Violation> Runtime::argument_check(TaggedPointer p) const {
  if (tag_of(p, options_.tags) == 0) return std::nullopt;
  return safety_check(p, 0);
}

std::optional<uint64_t> Runtime::nh_alloc(uint64_t size, uint64_t align) {
  std::lock_guard lock(mu_);
  return normal_heap_.allocate(size, align);
}

bool Runtime::nh_free(uint64_t address) {
  std::lock_guard lock(mu_);
  return normal_heap_.release(address);
}

std::optional<uint64_t> Runtime::nh_realloc(uint64_t address, uint64_t new_size) {
  std::lock_guard lock(mu_);
  if (address == 0) return normal_heap_.allocate(new_size);
  auto old_size = normal_heap_.block_size(address);
  if (!old_size) throw MemoryFault("realloc of an unknown normal-heap block", address);
  auto fresh = normal_heap_.allocate(new_size);
  if (!fresh) return std::nullopt;
  memory_.copy(*fresh, address, std::min(*old_size, new_size));
  normal_heap_.release(address);
  return fresh;
}

RuntimeStats Runtime::stats() const {
  std::lock_guard lock(mu_);
  RuntimeStats s;
  s.total_allocations = total_allocations_;
  s.peak_live_objects = peak_live_;
  s.current_live = current_live_;
  s.checks_executed = checks_.load(std::memory_order_relaxed);
  s.table_bytes = table_bytes();
  s.wraparound_reuses = wraparound_reuses_;
  return s;
}

uint64_t Runtime::next_index() const {
  std::lock_guard lock(mu_);
  return next_index_;
}

}  // namespace mesh
