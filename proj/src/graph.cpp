#include "tus/graph.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace tus {

const char* to_string(ArcKind kind) {
  switch (kind) {
    case ArcKind::kTurnaround:
      return "turnaround";
    case ArcKind::kSignOn:
      return "sign_on";
    case ArcKind::kSignOff:
      return "sign_off";
  }
  return "?";
}

int SchedulingGraph::trip_of(int node) const { return is_trip(node) ? node - 1 : -1; }

const std::vector<int>& SchedulingGraph::delta_plus(int node) const {
  if (node < 0 || node >= num_nodes()) throw std::out_of_range("unknown node " + std::to_string(node));
  return out_[node];
}

const std::vector<int>& SchedulingGraph::delta_minus(int node) const {
  if (node < 0 || node >= num_nodes()) throw std::out_of_range("unknown node " + std::to_string(node));
  return in_[node];
}

int SchedulingGraph::find_arc(int from_node, int to_node) const {
  for (int a : delta_plus(from_node)) {
    if (arcs_[a].to == to_node) return a;
  }
  return -1;
}

bool SchedulingGraph::allows(int arc, int type) const {
  const auto& t = arcs_.at(arc).allowed_types;
  return std::binary_search(t.begin(), t.end(), type);
}

std::vector<int> SchedulingGraph::arcs_of_type(int type) const {
  std::vector<int> out;
  for (const auto& a : arcs_) {
    if (allows(a.id, type)) out.push_back(a.id);
  }
  return out;
}

std::vector<int> SchedulingGraph::topological_order() const {
  std::vector<int> indeg(num_nodes(), 0);
  for (const auto& a : arcs_) ++indeg[a.to];
  std::queue<int> q;
  for (int v = 0; v < num_nodes(); ++v) {
    if (indeg[v] == 0) q.push(v);
  }
  std::vector<int> order;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    order.push_back(v);
    for (int a : out_[v]) {
      if (--indeg[arcs_[a].to] == 0) q.push(arcs_[a].to);
    }
  }
  if (static_cast<int>(order.size()) != num_nodes()) throw std::logic_error("graph has a cycle");
  return order;
}

std::string SchedulingGraph::node_label(int node) const {
  if (node == kSource) return "source";
  if (node == sink()) return "sink";
  return tt_.trip(trip_of(node)).id;
}

std::optional<Minutes> required_connection_time(const Trip& from, const Trip& to,
                                                const FleetConfig& fleet) {
  Minutes need = fleet.min_turnaround(from.arr_station);
  if (from.arr_station != to.dep_station) {
    auto run = fleet.empty_runs.travel_time(from.arr_station, to.dep_station);
    if (!run) return std::nullopt;
    need += *run;
  }
  return need;
}

SchedulingGraph build_dag(const Timetable& tt, const FleetConfig& fleet) {
  SchedulingGraph g;
  g.tt_ = tt;
  g.types_ = fleet.types;
  const int n = tt.size();
  const int ntypes = static_cast<int>(fleet.types.size());
  g.out_.assign(n + 2, {});
  g.in_.assign(n + 2, {});
  g.sign_on_.assign(n, -1);
  g.sign_off_.assign(n, -1);

  std::vector<std::vector<int>> serve(n);
  for (int j = 0; j < n; ++j) {
    for (int t = 0; t < ntypes; ++t) {
      if (fleet.type_may_serve(t, tt.trip(j))) serve[j].push_back(t);
    }
  }

  auto max_units = [&](const std::vector<int>& types) {
    if (fleet.families.empty()) {
      int s = 0;
      for (int t : types) s += fleet.types[t].fleet_size;
      return s;
    }
    int m = 0;
    for (const auto& f : fleet.families) {
      bool hit = std::any_of(types.begin(), types.end(), [&](int t) {
        return std::find(f.types.begin(), f.types.end(), t) != f.types.end();
      });
      if (hit) m = std::max(m, f.max_units);
    }
    return m;
  };

  auto add = [&](int from, int to, ArcKind kind, std::vector<int> types) {
    Arc a;
    a.id = static_cast<int>(g.arcs_.size());
    a.from = from;
    a.to = to;
    a.kind = kind;
    a.max_units = max_units(types);
    a.allowed_types = std::move(types);
    g.out_[from].push_back(a.id);
    g.in_[to].push_back(a.id);
    g.arcs_.push_back(a);
    return a.id;
  };

  for (int j = 0; j < n; ++j) {
    if (!serve[j].empty()) g.sign_on_[j] = add(SchedulingGraph::kSource, j + 1, ArcKind::kSignOn, serve[j]);
  }
  for (int i = 0; i < n; ++i) {
    const Trip& ti = tt.trip(i);
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const Trip& tj = tt.trip(j);
      auto need = required_connection_time(ti, tj, fleet);
      if (!need || tj.dep_time - ti.arr_time < *need) continue;
      std::vector<int> types;
      std::set_intersection(serve[i].begin(), serve[i].end(), serve[j].begin(), serve[j].end(),
                            std::back_inserter(types));
      if (types.empty()) continue;
      int id = add(i + 1, j + 1, ArcKind::kTurnaround, std::move(types));
      Arc& a = g.arcs_[id];
      a.empty_running = ti.arr_station != tj.dep_station;
      a.slack = tj.dep_time - ti.arr_time - *need;
      bool shunt = fleet.shunt_allowed.count({ti.id, tj.id}) > 0;
      const StationRules* st = fleet.station(ti.arr_station);
      if (!a.empty_running && st && st->shunt_min_dwell &&
          tj.dep_time - ti.arr_time >= *st->shunt_min_dwell) {
        shunt = true;
      }
      a.shunt_allowed = shunt;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!serve[i].empty()) g.sign_off_[i] = add(i + 1, n + 1, ArcKind::kSignOff, serve[i]);
  }

  g.chrono_.resize(n);
  std::iota(g.chrono_.begin(), g.chrono_.end(), 0);
  std::stable_sort(g.chrono_.begin(), g.chrono_.end(), [&](int a, int b) {
    const Trip& x = tt.trip(a);
    const Trip& y = tt.trip(b);
    if (x.dep_time != y.dep_time) return x.dep_time < y.dep_time;
    return x.arr_time < y.arr_time;
  });
  g.chrono_pos_.assign(n, 0);
  for (int p = 0; p < n; ++p) g.chrono_pos_[g.chrono_[p]] = p;
  return g;
}

std::vector<int> trips_without_flow_support(const SchedulingGraph& g) {
  std::vector<int> out;
  for (int j = 0; j < g.num_trips(); ++j) {
    if (g.sign_on_arc(j) < 0 || g.sign_off_arc(j) < 0) out.push_back(j);
  }
  return out;
}

std::string dump_graph(const SchedulingGraph& g) {
  std::ostringstream os;
  os << "arc_id,kind,from,to,empty,slack,types\n";
  for (const auto& a : g.arcs()) {
    os << a.id << ',' << to_string(a.kind) << ',' << g.node_label(a.from) << ','
       << g.node_label(a.to) << ',' << (a.empty_running ? 1 : 0) << ',' << a.slack << ',';
    for (size_t k = 0; k < a.allowed_types.size(); ++k) {
      if (k) os << ';';
      os << g.types()[a.allowed_types[k]].id;
    }
    os << '\n';
  }
  return os.str();
}

std::string to_dot(const SchedulingGraph& g) {
  std::ostringstream os;
  os << "digraph schedule {\n  rankdir=LR;\n";
  for (int v = 0; v < g.num_nodes(); ++v) {
    os << "  n" << v << " [label=\"" << g.node_label(v) << "\"";
    if (!g.is_trip(v)) os << ", shape=box";
    os << "];\n";
  }
  for (const auto& a : g.arcs()) {
    os << "  n" << a.from << " -> n" << a.to << " [label=\"" << a.id << "\"";
    if (a.empty_running) os << ", style=dashed";
    if (a.kind != ArcKind::kTurnaround) os << ", color=gray";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace tus
