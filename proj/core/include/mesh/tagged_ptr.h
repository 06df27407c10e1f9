#pragma once

#include <cstdint>
#include <stdexcept>

namespace mesh {

// Width of the pointer tag. The tag occupies the top `tag_bits` bits of a
// 64-bit word; the remaining low bits hold the address.
class TagConfig {
 public:
  static constexpr unsigned kMinTagBits = 1;
  static constexpr unsigned kMaxTagBits = 17;
  static constexpr unsigned kDefaultTagBits = 17;

  constexpr TagConfig() = default;

  // Throws std::invalid_argument outside [kMinTagBits, kMaxTagBits].
  explicit TagConfig(unsigned tag_bits) : tag_bits_(tag_bits) {
    if (tag_bits < kMinTagBits || tag_bits > kMaxTagBits) {
      throw std::invalid_argument("tag_bits must be in [1, 17]");
    }
  }

  constexpr unsigned tag_bits() const { return tag_bits_; }
  constexpr unsigned address_bits() const { return 64 - tag_bits_; }
  constexpr uint64_t address_mask() const {
    return (uint64_t{1} << address_bits()) - 1;
  }
  constexpr uint64_t tag_mask() const { return ~address_mask(); }
  // Largest usable table index, 2^T - 1.
  constexpr uint64_t max_tag() const { return (uint64_t{1} << tag_bits_) - 1; }
  constexpr uint64_t table_rows() const { return uint64_t{1} << tag_bits_; }

  friend constexpr bool operator==(TagConfig, TagConfig) = default;

 private:
  unsigned tag_bits_ = kDefaultTagBits;
};

// A simulated 64-bit machine pointer word. Tag 0 marks an unprotected pointer.
class TaggedPointer {
 public:
  constexpr TaggedPointer() = default;
  constexpr explicit TaggedPointer(uint64_t raw) : raw_(raw) {}

  constexpr uint64_t raw() const { return raw_; }
  constexpr bool is_null() const { return raw_ == 0; }

  friend constexpr bool operator==(TaggedPointer, TaggedPointer) = default;

 private:
  uint64_t raw_ = 0;
};

struct SplitPointer {
  uint64_t tag = 0;
  uint64_t address = 0;
  friend constexpr bool operator==(const SplitPointer&,
                                   const SplitPointer&) = default;
};

constexpr SplitPointer split(TaggedPointer p, TagConfig cfg) {
  return {p.raw() >> cfg.address_bits(), p.raw() & cfg.address_mask()};
}

constexpr uint64_t tag_of(TaggedPointer p, TagConfig cfg) {
  return p.raw() >> cfg.address_bits();
}

constexpr uint64_t strip(TaggedPointer p, TagConfig cfg) {
  return p.raw() & cfg.address_mask();
}

// Places `tag` into the tag field of `address`. Throws std::invalid_argument
// if the address already has bits set in the tag field or the tag does not fit.
inline TaggedPointer apply_tag(uint64_t address, uint64_t tag, TagConfig cfg) {
  if ((address & cfg.tag_mask()) != 0) {
    throw std::invalid_argument("address outside the canonical range");
  }
  if (tag > cfg.max_tag()) {
    throw std::invalid_argument("tag does not fit in the tag field");
  }
  return TaggedPointer{(tag << cfg.address_bits()) | address};
}

// Replaces whatever tag `p` carries with `tag`.
constexpr TaggedPointer retag(TaggedPointer p, uint64_t tag, TagConfig cfg) {
  return TaggedPointer{((tag << cfg.address_bits()) & cfg.tag_mask()) |
                       strip(p, cfg)};
}

// Plain 64-bit wrapping add on the tagged word. A carry out of the address
// field lands in the tag, as it would on hardware.
constexpr TaggedPointer ptr_add(TaggedPointer p, int64_t offset) {
  return TaggedPointer{p.raw() + static_cast<uint64_t>(offset)};
}

}  // namespace mesh
