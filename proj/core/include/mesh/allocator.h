#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace mesh {

struct Chunk {
  uint64_t address = 0;
  uint64_t size = 0;
  friend bool operator==(const Chunk&, const Chunk&) = default;
};

// First-fit free-list allocator over one fixed address range. Block metadata
// lives out of band, so nothing the simulated program writes can corrupt it.
// Not thread-safe; callers serialize.
class FreeListAllocator {
 public:
  static constexpr uint64_t kDefaultAlignment = 16;

  FreeListAllocator(uint64_t base, uint64_t size);

  // Lowest-address fit. A zero-byte request still reserves one byte so every
  // returned address is distinct. Returns nullopt when nothing fits or
  // `align` is not a power of two.
  std::optional<uint64_t> allocate(uint64_t size,
                                   uint64_t align = kDefaultAlignment);

  // False if `address` is not the start of a live block.
  bool release(uint64_t address);

  // Requested size of the live block starting at `address`.
  std::optional<uint64_t> block_size(uint64_t address) const;

  uint64_t base() const { return base_; }
  uint64_t size() const { return size_; }
  size_t live_blocks() const { return blocks_.size(); }
  std::vector<Chunk> free_chunks() const;

 private:
  struct Block {
    uint64_t requested;
    uint64_t reserved;
  };

  void insert_free(uint64_t address, uint64_t size);

  uint64_t base_;
  uint64_t size_;
  std::map<uint64_t, uint64_t> free_;   // address -> size, coalesced
  std::map<uint64_t, Block> blocks_;    // address -> live block
};

}  // namespace mesh
