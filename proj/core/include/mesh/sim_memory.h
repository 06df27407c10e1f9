#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mesh {

enum class RegionKind { SafeHeap, Globals, NormalHeap, Stack };

std::string_view to_string(RegionKind kind);

struct MemoryLayout {
  static constexpr uint64_t kSafeHeapBase = 0x1000;
  static constexpr uint64_t kGlobalsBase = 0x1'0000'0000;
  static constexpr uint64_t kNormalHeapBase = 0x0100'0000'0000;
  static constexpr uint64_t kStackTop = 0x7FFF'FFFF'F000;

  uint64_t safe_heap_size = 16ull << 20;
  uint64_t globals_size = 16ull << 20;
  uint64_t normal_heap_size = 256ull << 20;
  uint64_t stack_size = 8ull << 20;
};

// One contiguous mapped range. Storage is allocated lazily in 4 KiB pages;
// untouched pages read as zero.
class Region {
 public:
  static constexpr uint64_t kPageSize = 4096;

  Region(RegionKind kind, uint64_t base, uint64_t size)
      : kind_(kind), base_(base), size_(size) {}

  RegionKind kind() const { return kind_; }
  uint64_t base() const { return base_; }
  uint64_t size() const { return size_; }
  uint64_t end() const { return base_ + size_; }
  bool contains(uint64_t address, uint64_t length) const {
    return address >= base_ && length <= size_ &&
           address - base_ <= size_ - length;
  }

  void read(uint64_t address, std::span<uint8_t> out) const;
  void write(uint64_t address, std::span<const uint8_t> in);
  void fill(uint64_t address, uint64_t length, uint8_t value);

 private:
  using Page = std::array<uint8_t, kPageSize>;

  RegionKind kind_;
  uint64_t base_;
  uint64_t size_;
  std::unordered_map<uint64_t, std::unique_ptr<Page>> pages_;
};

// The simulated 64-bit address space. Layout, lowest first: safe heap,
// globals, normal heap, stack. Page zero is never mapped.
class AddressSpace {
 public:
  explicit AddressSpace(const MemoryLayout& layout = {});

  // Both throw MemoryFault unless [address, address + n) is inside a single
  // mapped region.
  std::vector<uint8_t> read_bytes(uint64_t address, uint64_t n) const;
  void write_bytes(uint64_t address, std::span<const uint8_t> bytes);

  void read_into(uint64_t address, std::span<uint8_t> out) const;
  uint64_t read_word(uint64_t address, unsigned width) const;
  void write_word(uint64_t address, unsigned width, uint64_t value);
  void fill(uint64_t address, uint64_t length, uint8_t value);
  void copy(uint64_t dst, uint64_t src, uint64_t length);

  // The one-comparison form used by the combined check: everything up to and
  // including the safe heap's upper bound counts, page zero included.
  bool in_safe_heap(uint64_t address) const {
    return address <= safe_heap_upper_;
  }

  uint64_t safe_heap_upper() const { return safe_heap_upper_; }
  const Region& region(RegionKind kind) const;
  Region& region(RegionKind kind);

  // Region containing [address, address + n), if any.
  std::optional<RegionKind> locate(uint64_t address, uint64_t n = 1) const;

 private:
  const Region& checked(uint64_t address, uint64_t n) const;
  Region& checked(uint64_t address, uint64_t n);

  std::array<Region, 4> regions_;
  uint64_t safe_heap_upper_;
};

}  // namespace mesh
