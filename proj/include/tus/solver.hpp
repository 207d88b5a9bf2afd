#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tus/model.hpp"

namespace tus {

// Members are x variables sharing arc, unit type and fixing footprint,
// sorted by unit uid.
struct Orbit {
  int arc = -1;
  int type = -1;
  std::vector<int> members;

  int representative() const { return members.front(); }
  int size() const { return static_cast<int>(members.size()); }
};

struct SearchNode {
  std::vector<int> fixed_one;
  std::vector<int> fixed_zero;
  std::vector<int> must_use;  // units that must sign on somewhere from the current trip on
  double bound = 0;
  std::vector<Orbit> orbit_partition;
  int depth = 0;
};

struct Candidate {
  int unit = -1;
  int arc = -1;
  int var = -1;
};

// Schedule prefix implied by a node's fixings. Trips are decided in
// chronological order; `current` is the first trip with open decisions.
struct SearchState {
  int pos = 0;
  int current = -1;
  std::vector<std::vector<int>> path;      // per unit, trips in time order
  std::vector<std::vector<int>> entry;     // per unit, arc entering each path trip
  std::vector<std::vector<int>> on_trip;   // per trip, units assigned
  std::vector<int> open_at;                // per unit: last trip so far, -1 fresh, -2 signed off
  std::vector<std::vector<std::pair<int, int>>> out_fixed;  // per unit: (node, arc) fixed to 1
  std::vector<Candidate> candidates;
  std::vector<int8_t> fix;                 // per variable: -1 free, 0, 1
  std::vector<char> must_use;
  double fixed_cost = 0;
  bool infeasible = false;
  std::string reason;
};

enum class BranchKind { kNone, kUnitOrbit, kArcOrbit, kAggregate, kTheta };

struct BranchDecision {
  BranchKind kind = BranchKind::kNone;
  Orbit orbit;
  int trip = -1;
  int unit_a = -1;
  int unit_b = -1;
  std::vector<int> orbit_sizes;  // all candidate orbits at the node

  std::string describe() const;
};

struct SolverOptions {
  bool orbital = true;
  bool deterministic = true;
  int64_t node_budget = 0;   // 0 = unlimited
  double time_budget_s = 0;  // 0 = unlimited
  bool enumerate = false;    // no bound pruning; counts every leaf
  bool aggregate = false;    // branch on whole-unit usage before sign-on arcs
  bool log_nodes = false;
  bool check_oracle = true;
  std::vector<std::pair<int, int>> fixings;  // (variable, value) applied at the root
};

struct BackendCapabilities {
  bool lp_relaxation = false;
  bool full_milp = false;
};

struct BoundResult {
  double value = 0;
  bool infeasible = false;
  std::vector<double> point;
};

class RelaxationBackend {
 public:
  virtual ~RelaxationBackend() = default;
  virtual BackendCapabilities capabilities() const = 0;
  virtual BoundResult bound(const MilpInstance& m, const SearchNode& node, const SearchState& state) = 0;
};

// Min-cost flow over the remaining trips: fresh units pay the sign-on
// weight, every unit pays its cheapest per-trip and per-arc cost, and each
// trip needs the fewest units that can carry its demand.
class CombinatorialBound : public RelaxationBackend {
 public:
  explicit CombinatorialBound(const MilpInstance& m);
  BackendCapabilities capabilities() const override { return {}; }
  BoundResult bound(const MilpInstance& m, const SearchNode& node, const SearchState& state) override;

  int static_min_units(int trip) const { return min_units_.at(trip); }

 private:
  std::vector<int> min_units_;
  std::vector<int> max_units_;
  std::vector<double> trip_cost_;
  std::vector<double> arc_cost_;
};

// Writes the model with the node's fixings as an LP file, runs
// `command <file>` and reads a bound (or "infeasible") from the last
// line of its standard output.
class ExternalLpBackend : public RelaxationBackend {
 public:
  ExternalLpBackend(std::string command, std::filesystem::path workdir,
                    BackendCapabilities caps = {true, false});
  BackendCapabilities capabilities() const override { return caps_; }
  BoundResult bound(const MilpInstance& m, const SearchNode& node, const SearchState& state) override;
  int calls() const { return calls_; }

 private:
  std::string command_;
  std::filesystem::path workdir_;
  BackendCapabilities caps_;
  int calls_ = 0;
};

enum class ProofState { kOptimal, kFeasible, kNone };
enum class SolveStatus { kOptimal, kInfeasible, kFeasible, kUnknown };

const char* to_string(ProofState p);
const char* to_string(SolveStatus s);

struct Incumbent {
  Solution solution;
  double objective = 0;
  ProofState proof = ProofState::kNone;
};

struct SearchStats {
  int64_t nodes = 0;
  int64_t leaves = 0;
  int64_t pruned_bound = 0;
  int64_t pruned_infeasible = 0;
  int64_t incumbents = 0;
  int max_depth = 0;
  double root_bound = 0;
  double seconds = 0;
  bool budget_exhausted = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kUnknown;
  std::optional<Incumbent> incumbent;
  SearchStats stats;
  std::vector<std::string> node_log;
  std::string certificate;
};

SearchNode root_node(const MilpInstance& m, const SolverOptions& opts = {});
SearchState build_state(const MilpInstance& m, const SearchNode& node, int start_pos = 0);
std::vector<Orbit> compute_orbits(const SearchNode& node, const MilpInstance& m);
std::pair<SearchNode, SearchNode> orbital_branch(const SearchNode& node, const Orbit& orbit,
                                                 bool orbital = true);
BranchDecision select_branch_target(const SearchNode& node, const MilpInstance& m,
                                    const SolverOptions& opts = {});

// Completes a leaf state (every trip decided) into a full solution vector;
// empty when no coupling order satisfies the rules.
std::optional<Solution> complete_leaf(const MilpInstance& m, const SearchState& state);

SolveResult solve(const MilpInstance& m, RelaxationBackend* backend = nullptr,
                  const SolverOptions& opts = {});

struct ReferenceLimits {
  int max_trips = 12;
  int max_units = 15;
};

// Exhaustive depth-first search over unit paths and coupling orders.
SolveResult reference_solve(const MilpInstance& m, const ReferenceLimits& limits = {});

}  // namespace tus
