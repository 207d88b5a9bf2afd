#pragma once

#include <string>
#include <vector>

#include "tus/timetable.hpp"

namespace tus {

enum class ArcKind { kTurnaround, kSignOn, kSignOff };

const char* to_string(ArcKind kind);

struct Arc {
  int id = 0;
  int from = 0;  // node index
  int to = 0;
  ArcKind kind = ArcKind::kTurnaround;
  bool empty_running = false;
  Minutes slack = 0;
  std::vector<int> allowed_types;
  int max_units = 0;
  bool shunt_allowed = false;
};

// Node 0 is the source, nodes 1..n are trips in timetable order, node n+1 is the sink.
class SchedulingGraph {
 public:
  static constexpr int kSource = 0;

  SchedulingGraph() = default;

  const Timetable& timetable() const { return tt_; }
  const std::vector<UnitType>& types() const { return types_; }
  int num_trips() const { return tt_.size(); }
  int num_nodes() const { return tt_.size() + 2; }
  int sink() const { return tt_.size() + 1; }
  int node_of_trip(int trip) const { return trip + 1; }
  // -1 for source and sink.
  int trip_of(int node) const;
  bool is_trip(int node) const { return node >= 1 && node <= tt_.size(); }

  const std::vector<Arc>& arcs() const { return arcs_; }
  const Arc& arc(int id) const { return arcs_.at(id); }
  int num_arcs() const { return static_cast<int>(arcs_.size()); }

  const std::vector<int>& delta_plus(int node) const;
  const std::vector<int>& delta_minus(int node) const;

  int sign_on_arc(int trip) const { return sign_on_.at(trip); }
  int sign_off_arc(int trip) const { return sign_off_.at(trip); }
  int find_arc(int from_node, int to_node) const;
  bool allows(int arc, int type) const;
  std::vector<int> arcs_of_type(int type) const;

  // Trips ordered by (departure, arrival, index).
  const std::vector<int>& chronological() const { return chrono_; }
  int chrono_position(int trip) const { return chrono_pos_.at(trip); }
  std::vector<int> topological_order() const;
  std::string node_label(int node) const;

 private:
  friend SchedulingGraph build_dag(const Timetable&, const FleetConfig&);

  Timetable tt_;
  std::vector<UnitType> types_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> out_, in_;
  std::vector<int> sign_on_, sign_off_;
  std::vector<int> chrono_, chrono_pos_;
};

SchedulingGraph build_dag(const Timetable& tt, const FleetConfig& fleet);

// Movement time a unit needs between arriving on `from` and departing on `to`;
// empty when no connection is permitted.
std::optional<Minutes> required_connection_time(const Trip& from, const Trip& to,
                                                const FleetConfig& fleet);

// Every trip wants a source-trip-sink path for some type.
std::vector<int> trips_without_flow_support(const SchedulingGraph& g);

std::string dump_graph(const SchedulingGraph& g);
std::string to_dot(const SchedulingGraph& g);

}  // namespace tus
