#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mesh/runtime.h"
#include "mesh/sim_memory.h"
#include "mesh/tagged_ptr.h"

namespace mesh {

using ObjectId = uint32_t;

struct ShadowObject {
  ObjectId id = 0;
  uint64_t base = 0;
  uint64_t size = 0;
  RegionKind region = RegionKind::NormalHeap;
  uint64_t tag = 0;  // tag handed out at allocation, 0 for normal heap
  bool live = true;
};

// Brute-force ground truth: every heap byte records which live object owns
// it. Knows nothing about tags or table rows; verdicts come from byte
// ownership and the provenance that travels with each value.
class ShadowMap {
 public:
  explicit ShadowMap(uint64_t safe_heap_upper) : safe_heap_upper_(safe_heap_upper) {}

  ObjectId on_alloc(uint64_t base, uint64_t size, RegionKind region, uint64_t tag);
  void on_free(ObjectId id);

  // nullopt means the access is legal.
  std::optional<ViolationKind> check(std::optional<ObjectId> provenance, uint64_t address,
                                     uint64_t size) const;
  std::optional<ViolationKind> check_free(std::optional<ObjectId> provenance,
                                          uint64_t address) const;

  const ShadowObject& object(ObjectId id) const { return objects_.at(id); }
  std::optional<ObjectId> owner(uint64_t address) const;
  size_t object_count() const { return objects_.size(); }

 private:
  static constexpr uint64_t kPage = 4096;

  void set_owner(uint64_t address, uint64_t length, uint32_t value);

  uint64_t safe_heap_upper_;
  std::vector<ShadowObject> objects_;
  // Per page, per byte: owning object id + 1, or 0 when no live object.
  std::unordered_map<uint64_t, std::vector<uint32_t>> bytes_;
};

enum class Agreement { Agree, ExpectedImprecision, Unexpected };

enum class Imprecision {
  None,
  WrapReuse,          // stale tag whose row now describes a new object
  TagOverflow,        // arithmetic carried into the tag bits
  UnprotectedRegion,  // object lives outside the safe heap
};

std::string_view to_string(Agreement a);
std::string_view to_string(Imprecision i);

struct AccessComparison {
  std::optional<ViolationKind> mesh;
  std::optional<ViolationKind> oracle;
  Agreement agreement = Agreement::Agree;
  Imprecision reason = Imprecision::None;
  TaggedPointer pointer;
  uint64_t size = 0;
  std::string function;
  int instr_index = -1;
};

// Matches a MESH verdict against the oracle verdict for one access.
// `row` is the table row the pointer's tag selects at the time of access.
AccessComparison compare_access(const ShadowMap& shadow, std::optional<ObjectId> provenance,
                                TaggedPointer p, uint64_t size,
                                std::optional<ViolationKind> mesh_verdict,
                                std::optional<ViolationKind> oracle_verdict, TagConfig tags,
                                const TableRow& row);

struct OracleSummary {
  uint64_t accesses = 0;
  uint64_t agreements = 0;
  uint64_t expected_imprecision = 0;
  uint64_t unexpected = 0;
  std::vector<AccessComparison> disagreements;

  void add(AccessComparison c);
  double agreement_percent() const {
    return accesses == 0 ? 100.0 : 100.0 * static_cast<double>(agreements) / static_cast<double>(accesses);
  }
};

}  // namespace mesh
