#include "mesh/oracle.h"

namespace mesh {

std::string_view to_string(Agreement a) {
  switch (a) {
    case Agreement::Agree: return "agree";
    case Agreement::ExpectedImprecision: return "expected-imprecision";
    case Agreement::Unexpected: return "unexpected";
  }
  return "?";
}

std::string_view to_string(Imprecision i) {
  switch (i) {
    case Imprecision::None: return "none";
    case Imprecision::WrapReuse: return "wrap-reuse";
    case Imprecision::TagOverflow: return "tag-overflow";
    case Imprecision::UnprotectedRegion: return "unprotected-region";
  }
  return "?";
}

void ShadowMap::set_owner(uint64_t address, uint64_t length, uint32_t value) {
  for (uint64_t a = address; a < address + length; ++a) {
    auto& page = bytes_[a / kPage];
    if (page.empty()) page.assign(kPage, 0);
    page[a % kPage] = value;
  }
}

ObjectId ShadowMap::on_alloc(uint64_t base, uint64_t size, RegionKind region, uint64_t tag) {
  const auto id = static_cast<ObjectId>(objects_.size());
  objects_.push_back({id, base, size, region, tag, true});
  set_owner(base, size, id + 1);
  return id;
}

void ShadowMap::on_free(ObjectId id) {
  ShadowObject& o = objects_.at(id);
  if (!o.live) return;
  o.live = false;
  set_owner(o.base, o.size, 0);
}

std::optional<ObjectId> ShadowMap::owner(uint64_t address) const {
  auto it = bytes_.find(address / kPage);
  if (it == bytes_.end()) return std::nullopt;
  uint32_t v = it->second[address % kPage];
  if (v == 0) return std::nullopt;
  return v - 1;
}

std::optional<ViolationKind> ShadowMap::check(std::optional<ObjectId> provenance,
                                              uint64_t address, uint64_t size) const {
  if (!provenance) {
    // A value that came from no heap object may not touch low memory: page
    // zero or any safe-heap byte.
    if (address <= safe_heap_upper_) return ViolationKind::IllegalSafeHeapAccess;
    return std::nullopt;
  }
  const ShadowObject& o = objects_.at(*provenance);
  if (!o.live) return ViolationKind::UseAfterFree;
  bool owned = true;
  if (size == 0) {
    // Pointer handed to external code: one-past-the-end is still valid.
    owned = address >= o.base && address <= o.base + o.size;
  }
  for (uint64_t i = 0; i < size && owned; ++i) {
    owned = owner(address + i) == o.id;
  }
  if (owned) return std::nullopt;
  return address < o.base ? ViolationKind::BufferUnderflow : ViolationKind::BufferOverflow;
}

std::optional<ViolationKind> ShadowMap::check_free(std::optional<ObjectId> provenance,
                                                   uint64_t address) const {
  if (!provenance) {
    if (address <= safe_heap_upper_) return ViolationKind::IllegalSafeHeapFree;
    return std::nullopt;
  }
  if (!objects_.at(*provenance).live) return ViolationKind::DoubleFree;
  return std::nullopt;
}

AccessComparison compare_access(const ShadowMap& shadow, std::optional<ObjectId> provenance,
                                TaggedPointer p, uint64_t size,
                                std::optional<ViolationKind> mesh_verdict,
                                std::optional<ViolationKind> oracle_verdict, TagConfig tags,
                                const TableRow& row) {
  AccessComparison c;
  c.mesh = mesh_verdict;
  c.oracle = oracle_verdict;
  c.pointer = p;
  c.size = size;
  if (mesh_verdict == oracle_verdict) return c;

  c.agreement = Agreement::Unexpected;
  if (!provenance) return c;
  const ShadowObject& o = shadow.object(*provenance);
  const SplitPointer s = split(p, tags);
  if (o.region != RegionKind::SafeHeap) {
    c.agreement = Agreement::ExpectedImprecision;
    c.reason = Imprecision::UnprotectedRegion;
  } else if (s.tag != o.tag) {
    c.agreement = Agreement::ExpectedImprecision;
    c.reason = Imprecision::TagOverflow;
  } else if (!o.live && !mesh_verdict && row.valid() && s.address >= row.lower_bound &&
             s.address + size <= row.upper_bound) {
    c.agreement = Agreement::ExpectedImprecision;
    c.reason = Imprecision::WrapReuse;
  }
  return c;
}

void OracleSummary::add(AccessComparison c) {
  ++accesses;
  switch (c.agreement) {
    case Agreement::Agree:
      ++agreements;
      return;
    case Agreement::ExpectedImprecision:
      ++expected_imprecision;
      break;
    case Agreement::Unexpected:
      ++unexpected;
      break;
  }
  disagreements.push_back(std::move(c));
}

}  // namespace mesh
