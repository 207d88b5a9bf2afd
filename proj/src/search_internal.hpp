#pragma once

#include <vector>

#include "order_solver.hpp"
#include "tus/solver.hpp"

namespace tus::detail {

// Fewest extra units (from `avail` per type) that bring the trip to
// `residual` more seats, given the types already on board. -1 if none do.
// Car limits are ignored, so the count is a lower bound.
int min_units_to_cover(const MilpInstance& m, int trip, int residual, const std::vector<int>& avail,
                       const std::vector<int>& base);

// Largest formation the trip may run with.
int max_units_on(const MilpInstance& m, int trip);

// Whether a formation with these type counts may run trip j.
bool formation_ok(const MilpInstance& m, int trip, const std::vector<int>& counts);

// Coupling-order problem over trips whose chronological position is at
// most `limit_pos`; out-arcs come from fixings (or the unit paths when
// `complete` is set, in which case path ends sign off).
OrderSolver order_problem(const MilpInstance& m, const SearchState& s, int limit_pos, bool complete);

int arc_of(const SearchState& s, int unit, int node);  // fixed out-arc of unit at node, -1 if none
int entry_at(const SearchState& s, int unit, int trip);

}  // namespace tus::detail
