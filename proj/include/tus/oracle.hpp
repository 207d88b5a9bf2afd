#pragma once

#include <string>
#include <vector>

#include "tus/model.hpp"
#include "tus/timetable.hpp"

namespace tus {

struct Placement {
  int unit = -1;
  int theta = 0;  // 1 = front in travel direction
};

// Per unit the trips it runs in time order; per trip who is on board and where.
struct UnitSchedule {
  std::vector<int> unit_type;
  std::vector<std::vector<int>> paths;
  std::vector<std::vector<Placement>> placements;

  int num_units() const { return static_cast<int>(paths.size()); }
};

enum class ViolationKind {
  kCouplingOrder,
  kDecouplingOrder,
  kPropagation,
  kBlockage,
  kCoverage,
  kCapacity,
  kReuse,
  kFleet,
  kBan,
  kTime,
};

const char* to_string(ViolationKind k);

struct Violation {
  std::string rule;  // "T3.rowN" for ordering casework, "structural.*" otherwise
  ViolationKind kind = ViolationKind::kCoverage;
  int trip = -1;
  std::string station;
  std::vector<int> units;
  std::string explanation;
};

struct OracleOptions {
  ModelFeatures features;
};

// Checks a schedule against the timetable, fleet and coupling-order rules
// without going through the model. Throws StructuralError on schedules
// that reference unknown trips or units, or whose placements are not
// a permutation 1..q matching the unit paths.
std::vector<Violation> verify(const UnitSchedule& schedule, const Timetable& tt, const FleetConfig& fleet,
                              const OracleOptions& opts = {});

// Reads unit paths and coupling orders off a solution vector.
UnitSchedule decode(const Solution& x, const MilpInstance& m);
UnitSchedule decode(const std::vector<double>& x, const MilpInstance& m);

std::string violations_to_jsonl(const std::vector<Violation>& v, const Timetable& tt);

}  // namespace tus
