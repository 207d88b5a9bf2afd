#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tus/graph.hpp"
#include "tus/model.hpp"
#include "tus/oracle.hpp"
#include "tus/solver.hpp"
#include "tus/timetable.hpp"

namespace tus::testing {

inline std::filesystem::path data_dir() { return TUS_DATA_DIR; }

struct Instance {
  Timetable tt;
  FleetConfig fleet;
  SchedulingGraph g;
  std::shared_ptr<MilpInstance> m;

  const MilpInstance& model() const { return *m; }
};

inline Instance make_instance(Timetable tt, FleetConfig fleet, ModelFeatures features = {}) {
  Instance in{std::move(tt), std::move(fleet), {}, nullptr};
  in.g = build_dag(in.tt, in.fleet);
  ModelOptions mo;
  mo.features = features;
  in.m = std::make_shared<MilpInstance>(build_model(in.g, in.fleet, mo));
  return in;
}

inline Instance load(const std::string& name, ModelFeatures features = {}) {
  auto dir = data_dir() / name;
  return make_instance(parse_timetable(dir / "timetable.csv"), load_fleet_config(dir / "fleet.cfg"), features);
}

inline Instance inline_instance(const std::string& csv, const std::string& cfg, ModelFeatures features = {}) {
  return make_instance(parse_timetable_text(csv), parse_fleet_config(cfg), features);
}

inline const char* kHeader =
    "Trip,Departure station,Arrival station,Departure time,Arrival time,Passenger demand,Direction\n";

inline int trip(const Instance& in, const std::string& id) { return in.tt.index_of(id); }

// Solution vector for unit paths and per-trip orders; empty if some arc is missing.
inline std::optional<Solution> encode(const MilpInstance& m, const std::vector<std::vector<int>>& paths,
                                      const std::vector<std::map<int, int>>& theta) {
  const SchedulingGraph& g = m.graph();
  Solution x(m.num_vars(), 0);
  auto set = [&](int arc, int h) {
    if (arc < 0 || m.x(arc, h) < 0) return false;
    x[m.x(arc, h)] = 1;
    return true;
  };
  for (int h = 0; h < static_cast<int>(paths.size()); ++h) {
    const auto& p = paths[h];
    if (p.empty()) continue;
    if (!set(g.sign_on_arc(p.front()), h)) return std::nullopt;
    for (size_t k = 1; k < p.size(); ++k) {
      if (!set(g.find_arc(g.node_of_trip(p[k - 1]), g.node_of_trip(p[k])), h)) return std::nullopt;
    }
    if (!set(g.sign_off_arc(p.back()), h)) return std::nullopt;
  }
  for (int j = 0; j < g.num_trips(); ++j) {
    for (auto [h, t] : theta[j]) {
      if (m.theta(j, h) < 0) return std::nullopt;
      x[m.theta(j, h)] = t;
    }
    for (auto [h1, t1] : theta[j]) {
      for (auto [h2, t2] : theta[j]) {
        int v = h1 < h2 ? m.pair(j, h1, h2) : -1;
        if (v >= 0) x[v] = t1 > t2;
      }
    }
  }
  return x;
}

inline UnitSchedule schedule_of(const MilpInstance& m, const std::vector<std::vector<int>>& paths,
                                const std::vector<std::map<int, int>>& theta) {
  UnitSchedule s;
  s.paths = paths;
  s.paths.resize(m.num_units());
  for (const auto& u : m.units()) s.unit_type.push_back(u.type);
  s.placements.assign(m.graph().num_trips(), {});
  for (int j = 0; j < m.graph().num_trips(); ++j) {
    for (auto [h, t] : theta[j]) s.placements[j].push_back({h, t});
  }
  return s;
}

// Every path through the DAG (as trip lists), including the empty one.
inline std::vector<std::vector<int>> all_paths(const SchedulingGraph& g, int type) {
  std::vector<std::vector<int>> out{{}};
  std::vector<int> cur;
  std::function<void(int)> walk = [&](int node) {
    for (int a : g.delta_plus(node)) {
      const Arc& arc = g.arc(a);
      if (!g.allows(a, type) || arc.to == g.sink()) continue;
      cur.push_back(g.trip_of(arc.to));
      if (g.allows(g.sign_off_arc(cur.back()), type)) out.push_back(cur);
      walk(arc.to);
      cur.pop_back();
    }
  };
  for (int a : g.delta_plus(SchedulingGraph::kSource)) {
    if (!g.allows(a, type)) continue;
    int j = g.trip_of(g.arc(a).to);
    cur = {j};
    if (g.allows(g.sign_off_arc(j), type)) out.push_back(cur);
    walk(g.arc(a).to);
  }
  return out;
}

// Visits every schedule: one path per unit, then every order permutation per trip.
inline void for_each_schedule(const MilpInstance& m,
                              const std::function<void(const std::vector<std::vector<int>>&,
                                                       const std::vector<std::map<int, int>>&)>& visit) {
  const SchedulingGraph& g = m.graph();
  const int U = m.num_units(), n = g.num_trips();
  std::vector<std::vector<std::vector<int>>> options(U);
  for (int h = 0; h < U; ++h) options[h] = all_paths(g, m.units()[h].type);
  std::vector<std::vector<int>> paths(U);
  std::vector<std::map<int, int>> theta(n);
  std::function<void(int, const std::vector<std::vector<int>>&)> orders = [&](int j,
                                                                              const std::vector<std::vector<int>>& on) {
    if (j == n) {
      visit(paths, theta);
      return;
    }
    std::vector<int> perm(on[j].size());
    for (size_t k = 0; k < perm.size(); ++k) perm[k] = static_cast<int>(k) + 1;
    do {
      theta[j].clear();
      for (size_t k = 0; k < perm.size(); ++k) theta[j][on[j][k]] = perm[k];
      orders(j + 1, on);
    } while (std::next_permutation(perm.begin(), perm.end()));
    theta[j].clear();
  };
  std::function<void(int)> pick = [&](int h) {
    if (h == U) {
      std::vector<std::vector<int>> on(n);
      for (int u = 0; u < U; ++u) {
        for (int j : paths[u]) on[j].push_back(u);
      }
      orders(0, on);
      return;
    }
    for (const auto& p : options[h]) {
      paths[h] = p;
      pick(h + 1);
    }
    paths[h].clear();
  };
  pick(0);
}

inline bool rows_hold(const MilpInstance& m, const Solution& x, const std::function<bool(RowFamily)>& which) {
  for (int r = 0; r < m.num_rows(); ++r) {
    if (which(m.constraints()[r].family) && !m.row_satisfied(r, x)) return false;
  }
  return true;
}

inline bool has_rule_prefix(const std::vector<Violation>& v, const std::string& prefix) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& e) { return e.rule.rfind(prefix, 0) == 0; });
}

// Unit on trip j whose next trip is k, or -1.
inline int unit_continuing(const UnitSchedule& s, int j, int k) {
  for (int h = 0; h < s.num_units(); ++h) {
    const auto& p = s.paths[h];
    for (size_t q = 0; q + 1 < p.size(); ++q) {
      if (p[q] == j && p[q + 1] == k) return h;
    }
  }
  return -1;
}

inline int theta_of(const UnitSchedule& s, int j, int h) {
  for (const auto& p : s.placements[j]) {
    if (p.unit == h) return p.theta;
  }
  return 0;
}

inline int var_of(const MilpInstance& m, int from_trip, int to_trip, int h) {
  const SchedulingGraph& g = m.graph();
  int a = from_trip < 0 ? g.sign_on_arc(to_trip)
                        : (to_trip < 0 ? g.sign_off_arc(from_trip)
                                       : g.find_arc(g.node_of_trip(from_trip), g.node_of_trip(to_trip)));
  return a < 0 ? -1 : m.x(a, h);
}

// Fixings pinning each unit's sign-on and turnaround arcs along a path.
inline std::vector<std::pair<int, int>> pin_paths(const MilpInstance& m,
                                                  const std::map<int, std::vector<int>>& paths) {
  std::vector<std::pair<int, int>> fix;
  for (const auto& [h, p] : paths) {
    int prev = -1;
    for (int j : p) {
      fix.push_back({var_of(m, prev, j, h), 1});
      prev = j;
    }
  }
  return fix;
}

}  // namespace tus::testing
