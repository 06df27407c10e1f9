#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mesh {

// Anything that stops the simulated machine that is not a MESH violation.
class SimulatorFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Access to an address no region maps, or a free of a block the
// allocator never handed out.
class MemoryFault : public SimulatorFault {
 public:
  MemoryFault(const std::string& what, uint64_t address)
      : SimulatorFault(what), address_(address) {}
  uint64_t address() const { return address_; }

 private:
  uint64_t address_;
};

// Broken toolkit invariant, e.g. the safe-heap allocator asked to release a
// block it does not own.
class InternalFault : public SimulatorFault {
 public:
  using SimulatorFault::SimulatorFault;
};

}  // namespace mesh
