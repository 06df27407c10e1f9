#include "mesh/allocator.h"

#include <bit>
#include <iterator>

namespace mesh {

FreeListAllocator::FreeListAllocator(uint64_t base, uint64_t size)
    : base_(base), size_(size) {
  if (size > 0) free_.emplace(base, size);
}

std::optional<uint64_t> FreeListAllocator::allocate(uint64_t size, uint64_t align) {
  if (align == 0 || !std::has_single_bit(align)) return std::nullopt;
  const uint64_t reserve = size == 0 ? 1 : size;
  if (reserve > size_) return std::nullopt;

  for (auto it = free_.begin(); it != free_.end(); ++it) {
    const uint64_t start = it->first;
    const uint64_t end = start + it->second;
    const uint64_t aligned = (start + align - 1) & ~(align - 1);
    if (aligned < start || aligned > end || end - aligned < reserve) continue;

    free_.erase(it);
    if (aligned > start) free_.emplace(start, aligned - start);
    if (aligned + reserve < end) free_.emplace(aligned + reserve, end - aligned - reserve);
    blocks_.emplace(aligned, Block{size, reserve});
    return aligned;
  }
  return std::nullopt;
}

bool FreeListAllocator::release(uint64_t address) {
  auto it = blocks_.find(address);
  if (it == blocks_.end()) return false;
  const uint64_t reserved = it->second.reserved;
  blocks_.erase(it);
  insert_free(address, reserved);
  return true;
}

void FreeListAllocator::insert_free(uint64_t address, uint64_t size) {
  auto next = free_.lower_bound(address);
  if (next != free_.end() && address + size == next->first) {
    size += next->second;
    next = free_.erase(next);
  }
  if (next != free_.begin()) {
    auto prev = std::prev(next);
    if (prev->first + prev->second == address) {
      prev->second += size;
      return;
    }
  }
  free_.emplace_hint(next, address, size);
}

std::optional<uint64_t> FreeListAllocator::block_size(uint64_t address) const {
  auto it = blocks_.find(address);
  if (it == blocks_.end()) return std::nullopt;
  return it->second.requested;
}

std::vector<Chunk> FreeListAllocator::free_chunks() const {
  std::vector<Chunk> out;
  out.reserve(free_.size());
  for (const auto& [address, size] : free_) out.push_back({address, size});
  return out;
}

}  // namespace mesh
