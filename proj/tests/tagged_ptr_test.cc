#include <gtest/gtest.h>

#include <random>

#include "mesh/tagged_ptr.h"

namespace mesh {
namespace {

TEST(TagConfig, DefaultGeometry) {
  TagConfig cfg;
  EXPECT_EQ(cfg.tag_bits(), 17u);
  EXPECT_EQ(cfg.address_bits(), 47u);
  EXPECT_EQ(cfg.max_tag(), 131071u);
  EXPECT_EQ(cfg.table_rows(), 131072u);
  EXPECT_EQ(cfg.address_mask(), 0x7FFF'FFFF'FFFFull);
  EXPECT_EQ(cfg.tag_mask(), 0xFFFF'8000'0000'0000ull);
}

TEST(TagConfig, RejectsOutOfRangeWidths) {
  EXPECT_THROW(TagConfig(0), std::invalid_argument);
  EXPECT_THROW(TagConfig(18), std::invalid_argument);
  EXPECT_NO_THROW(TagConfig(1));
  EXPECT_EQ(TagConfig(1).max_tag(), 1u);
  EXPECT_EQ(TagConfig(4).max_tag(), 15u);
}

TEST(TaggedPointer, SplitOfKnownWord) {
  TagConfig cfg;
  TaggedPointer p{0x0000'8000'0000'1000ull};
  EXPECT_EQ(split(p, cfg), (SplitPointer{1, 0x1000}));
  TaggedPointer top{0xFFFF'8000'0000'1000ull};
  EXPECT_EQ(tag_of(top, cfg), 131071u);
  EXPECT_EQ(strip(top, cfg), 0x1000u);
}

TEST(TaggedPointer, UntaggedPointerHasTagZero) {
  TagConfig cfg;
  EXPECT_EQ(tag_of(TaggedPointer{0x0100'0000'0000ull}, cfg), 0u);
  EXPECT_EQ(tag_of(TaggedPointer{}, cfg), 0u);
}

TEST(TaggedPointer, ApplyTagRejectsNonCanonicalAddress) {
  TagConfig cfg;
  EXPECT_THROW(apply_tag(uint64_t{1} << 47, 1, cfg), std::invalid_argument);
  EXPECT_THROW(apply_tag(0x1000, 131072, cfg), std::invalid_argument);
}

TEST(TaggedPointer, RoundTripForEveryWidth) {
  std::mt19937_64 rng(17);
  for (unsigned t = 1; t <= 17; ++t) {
    TagConfig cfg(t);
    for (int i = 0; i < 2000; ++i) {
      const uint64_t address = rng() & cfg.address_mask();
      const uint64_t tag = rng() % cfg.table_rows();
      const TaggedPointer p = apply_tag(address, tag, cfg);
      ASSERT_EQ(split(p, cfg), (SplitPointer{tag, address}));
      ASSERT_EQ(strip(p, cfg), address);
      ASSERT_EQ(retag(TaggedPointer{address}, tag, cfg), p);
    }
  }
}

TEST(TaggedPointer, RetagReplacesExistingTag) {
  TagConfig cfg(4);
  TaggedPointer p = apply_tag(0x2000, 3, cfg);
  TaggedPointer q = retag(p, 9, cfg);
  EXPECT_EQ(tag_of(q, cfg), 9u);
  EXPECT_EQ(strip(q, cfg), 0x2000u);
}

TEST(TaggedPointer, PtrAddKeepsTagForInRangeOffsets) {
  TagConfig cfg;
  TaggedPointer p = apply_tag(0x1000, 77, cfg);
  EXPECT_EQ(split(ptr_add(p, 15), cfg), (SplitPointer{77, 0x100F}));
  EXPECT_EQ(split(ptr_add(p, -1), cfg), (SplitPointer{77, 0x0FFF}));
}

TEST(TaggedPointer, PtrAddCarriesIntoTag) {
  TagConfig cfg;
  TaggedPointer p = apply_tag(cfg.address_mask(), 5, cfg);
  EXPECT_EQ(split(ptr_add(p, 1), cfg), (SplitPointer{6, 0}));
  TaggedPointer low = apply_tag(0, 5, cfg);
  EXPECT_EQ(split(ptr_add(low, -1), cfg), (SplitPointer{4, cfg.address_mask()}));
}

}  // namespace
}  // namespace mesh
