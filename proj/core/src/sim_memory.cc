#include "mesh/sim_memory.h"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "mesh/errors.h"

namespace mesh {

std::string_view to_string(RegionKind kind) {
  switch (kind) {
    case RegionKind::SafeHeap: return "safe_heap";
    case RegionKind::Globals: return "globals";
    case RegionKind::NormalHeap: return "normal_heap";
    case RegionKind::Stack: return "stack";
  }
  return "?";
}

void Region::read(uint64_t address, std::span<uint8_t> out) const {
  uint64_t offset = address - base_;
  size_t done = 0;
  while (done < out.size()) {
    uint64_t page = (offset + done) / kPageSize;
    uint64_t in_page = (offset + done) % kPageSize;
    size_t chunk = std::min<uint64_t>(out.size() - done, kPageSize - in_page);
    auto it = pages_.find(page);
    if (it == pages_.end()) {
      std::memset(out.data() + done, 0, chunk);
    } else {
      std::memcpy(out.data() + done, it->second->data() + in_page, chunk);
    }
    done += chunk;
  }
}

void Region::write(uint64_t address, std::span<const uint8_t> in) {
  uint64_t offset = address - base_;
  size_t done = 0;
  while (done < in.size()) {
    uint64_t page = (offset + done) / kPageSize;
    uint64_t in_page = (offset + done) % kPageSize;
    size_t chunk = std::min<uint64_t>(in.size() - done, kPageSize - in_page);
    auto& slot = pages_[page];
    if (!slot) slot = std::make_unique<Page>(Page{});
    std::memcpy(slot->data() + in_page, in.data() + done, chunk);
    done += chunk;
  }
}

void Region::fill(uint64_t address, uint64_t length, uint8_t value) {
  uint64_t offset = address - base_;
  uint64_t done = 0;
  while (done < length) {
    uint64_t page = (offset + done) / kPageSize;
    uint64_t in_page = (offset + done) % kPageSize;
    uint64_t chunk = std::min<uint64_t>(length - done, kPageSize - in_page);
    auto it = pages_.find(page);
    if (it == pages_.end()) {
      if (value != 0) {
        auto& slot = pages_[page];
        slot = std::make_unique<Page>(Page{});
        std::memset(slot->data() + in_page, value, chunk);
      }
    } else {
      std::memset(it->second->data() + in_page, value, chunk);
    }
    done += chunk;
  }
}

namespace {

std::array<Region, 4> make_regions(const MemoryLayout& l) {
  if (l.safe_heap_size == 0 ||
      MemoryLayout::kSafeHeapBase + l.safe_heap_size > MemoryLayout::kGlobalsBase) {
    throw std::invalid_argument("safe heap size does not fit below globals");
  }
  if (l.stack_size > MemoryLayout::kStackTop - MemoryLayout::kNormalHeapBase -
                         l.normal_heap_size) {
    throw std::invalid_argument("stack overlaps the normal heap");
  }
  return {Region(RegionKind::SafeHeap, MemoryLayout::kSafeHeapBase, l.safe_heap_size),
          Region(RegionKind::Globals, MemoryLayout::kGlobalsBase, l.globals_size),
          Region(RegionKind::NormalHeap, MemoryLayout::kNormalHeapBase,
                 l.normal_heap_size),
          Region(RegionKind::Stack, MemoryLayout::kStackTop - l.stack_size,
                 l.stack_size)};
}

[[noreturn]] void unmapped(uint64_t address, uint64_t n) {
  std::ostringstream os;
  os << "unmapped access of " << n << " bytes at 0x" << std::hex << address;
  throw MemoryFault(os.str(), address);
}

}  // namespace

AddressSpace::AddressSpace(const MemoryLayout& layout)
    : regions_(make_regions(layout)),
      safe_heap_upper_(MemoryLayout::kSafeHeapBase + layout.safe_heap_size) {}

const Region& AddressSpace::region(RegionKind kind) const {
  return regions_[static_cast<size_t>(kind)];
}

Region& AddressSpace::region(RegionKind kind) {
  return regions_[static_cast<size_t>(kind)];
}

std::optional<RegionKind> AddressSpace::locate(uint64_t address, uint64_t n) const {
  for (const Region& r : regions_) {
    if (r.contains(address, n)) return r.kind();
  }
  return std::nullopt;
}

const Region& AddressSpace::checked(uint64_t address, uint64_t n) const {
  for (const Region& r : regions_) {
    if (r.contains(address, n)) return r;
  }
  unmapped(address, n);
}

Region& AddressSpace::checked(uint64_t address, uint64_t n) {
  return const_cast<Region&>(std::as_const(*this).checked(address, n));
}

std::vector<uint8_t> AddressSpace::read_bytes(uint64_t address, uint64_t n) const {
  if (n == 0) return {};
  const Region& r = checked(address, n);
  std::vector<uint8_t> out(n);
  r.read(address, out);
  return out;
}

void AddressSpace::read_into(uint64_t address, std::span<uint8_t> out) const {
  if (out.empty()) return;
  checked(address, out.size()).read(address, out);
}

void AddressSpace::write_bytes(uint64_t address, std::span<const uint8_t> bytes) {
  if (bytes.empty()) return;
  checked(address, bytes.size()).write(address, bytes);
}

uint64_t AddressSpace::read_word(uint64_t address, unsigned width) const {
  std::array<uint8_t, 8> buf{};
  read_into(address, std::span<uint8_t>(buf.data(), width));
  uint64_t value = 0;
  for (unsigned i = 0; i < width; ++i) value |= uint64_t{buf[i]} << (8 * i);
  return value;
}

void AddressSpace::write_word(uint64_t address, unsigned width, uint64_t value) {
  std::array<uint8_t, 8> buf{};
  for (unsigned i = 0; i < width; ++i) buf[i] = static_cast<uint8_t>(value >> (8 * i));
  write_bytes(address, std::span<const uint8_t>(buf.data(), width));
}

void AddressSpace::fill(uint64_t address, uint64_t length, uint8_t value) {
  if (length == 0) return;
  checked(address, length).fill(address, length, value);
}

void AddressSpace::copy(uint64_t dst, uint64_t src, uint64_t length) {
  if (length == 0) return;
  std::vector<uint8_t> tmp = read_bytes(src, length);
  write_bytes(dst, tmp);
}

}  // namespace mesh
