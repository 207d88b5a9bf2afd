#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <queue>
#include <stdexcept>
#include <tuple>

#include "search_internal.hpp"
#include "tus/errors.hpp"
#include "tus/oracle.hpp"
#include "tus/solver.hpp"

namespace tus {

using detail::arc_of;
using detail::entry_at;

namespace detail {

int arc_of(const SearchState& s, int unit, int node) {
  for (const auto& [from, a] : s.out_fixed[unit]) {
    if (from == node) return a;
  }
  return -1;
}

int entry_at(const SearchState& s, int unit, int trip) {
  const auto& p = s.path[unit];
  for (size_t k = 0; k < p.size(); ++k) {
    if (p[k] == trip) return s.entry[unit][k];
  }
  return -1;
}

bool formation_ok(const MilpInstance& m, int trip, const std::vector<int>& counts) {
  const FleetConfig& fleet = m.fleet();
  int total = 0, length = 0;
  for (size_t t = 0; t < counts.size(); ++t) {
    total += counts[t];
    length += counts[t] * fleet.types[t].car_length;
  }
  if (total == 0) return true;
  if (auto lim = m.platform_limit(trip); lim && length > *lim) return false;
  if (!m.options().features.families || fleet.families.empty()) return true;
  for (const auto& f : fleet.families) {
    int units = 0, cars = 0;
    bool fits = true;
    for (size_t t = 0; t < counts.size() && fits; ++t) {
      if (counts[t] == 0) continue;
      if (std::find(f.types.begin(), f.types.end(), static_cast<int>(t)) == f.types.end()) fits = false;
      units += counts[t];
      cars += counts[t] * fleet.types[t].num_cars;
    }
    if (fits && units <= f.max_units && cars <= f.max_cars) return true;
  }
  return false;
}

int max_units_on(const MilpInstance& m, int trip) {
  const FleetConfig& fleet = m.fleet();
  const Trip& t = m.graph().timetable().trip(trip);
  int all = 0;
  for (int k = 0; k < static_cast<int>(fleet.types.size()); ++k) {
    if (fleet.type_may_serve(k, t)) all += fleet.types[k].fleet_size;
  }
  if (!m.options().features.families || fleet.families.empty()) return all;
  int best = 0;
  for (const auto& f : fleet.families) {
    int avail = 0;
    for (int k : f.types) {
      if (fleet.type_may_serve(k, t)) avail += fleet.types[k].fleet_size;
    }
    best = std::max(best, std::min(avail, f.max_units));
  }
  return best;
}

int min_units_to_cover(const MilpInstance& m, int trip, int residual, const std::vector<int>& avail,
                       const std::vector<int>& base) {
  if (residual <= 0) return 0;
  const FleetConfig& fleet = m.fleet();
  const int T = static_cast<int>(fleet.types.size());
  auto greedy = [&](const std::vector<int>& types, int limit) {
    std::vector<int> order = types;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (fleet.types[a].capacity != fleet.types[b].capacity) return fleet.types[a].capacity > fleet.types[b].capacity;
      return a < b;
    });
    int need = residual, used = 0;
    for (int t : order) {
      for (int c = 0; c < avail[t] && need > 0; ++c) {
        need -= fleet.types[t].capacity;
        ++used;
      }
    }
    return (need > 0 || used > limit) ? -1 : used;
  };
  const Trip& tr = m.graph().timetable().trip(trip);
  if (!m.options().features.families || fleet.families.empty()) {
    std::vector<int> all;
    for (int t = 0; t < T; ++t) {
      if (fleet.type_may_serve(t, tr)) all.push_back(t);
    }
    return greedy(all, std::numeric_limits<int>::max());
  }
  int best = -1;
  for (const auto& f : fleet.families) {
    int present = 0;
    bool fits = true;
    for (int t = 0; t < T; ++t) {
      if (base[t] == 0) continue;
      present += base[t];
      if (std::find(f.types.begin(), f.types.end(), t) == f.types.end()) fits = false;
    }
    if (!fits) continue;
    std::vector<int> types;
    for (int t : f.types) {
      if (fleet.type_may_serve(t, tr)) types.push_back(t);
    }
    int c = greedy(types, f.max_units - present);
    if (c >= 0 && (best < 0 || c < best)) best = c;
  }
  return best;
}

OrderSolver order_problem(const MilpInstance& m, const SearchState& s, int limit_pos, bool complete) {
  const SchedulingGraph& g = m.graph();
  const Timetable& tt = g.timetable();
  const int n = g.num_trips();
  std::vector<std::vector<int>> on(n);
  for (int j = 0; j < n; ++j) {
    if (g.chrono_position(j) <= limit_pos) on[j] = s.on_trip[j];
  }
  OrderSolver os(on);
  auto out_arc = [&](int h, int j) {
    if (!complete) return arc_of(s, h, g.node_of_trip(j));
    const auto& p = s.path[h];
    for (size_t k = 0; k < p.size(); ++k) {
      if (p[k] == j) return k + 1 < p.size() ? s.entry[h][k + 1] : g.sign_off_arc(j);
    }
    return -1;
  };
  auto ordering_arc = [&](int a) {
    return a >= 0 && g.arc(a).kind == ArcKind::kTurnaround && !g.arc(a).shunt_allowed;
  };
  for (int j = 0; j < n; ++j) {
    const auto& hs = on[j];
    if (hs.size() < 2) continue;
    const Trip& tj = tt.trip(j);
    for (size_t p = 0; p < hs.size(); ++p) {
      for (size_t q = p + 1; q < hs.size(); ++q) {
        int h1 = hs[p], h2 = hs[q];
        int a1 = entry_at(s, h1, j), a2 = entry_at(s, h2, j);
        if (ordering_arc(a1) && ordering_arc(a2)) {
          int i1 = g.trip_of(g.arc(a1).from), i2 = g.trip_of(g.arc(a2).from);
          if (a1 == a2) {
            os.link(i1, j, h1, h2, tt.trip(i1).direction == tj.direction);
          } else {
            int sg = detail::couple_sign(tj, tt.trip(i1), tt.trip(i2));
            if (sg > 0) os.force(j, h2, h1);
            if (sg < 0) os.force(j, h1, h2);
          }
        }
        int o1 = out_arc(h1, j), o2 = out_arc(h2, j);
        if (o1 != o2 && ordering_arc(o1) && ordering_arc(o2)) {
          int k1 = g.trip_of(g.arc(o1).to), k2 = g.trip_of(g.arc(o2).to);
          int sg = detail::decouple_sign(tj, tt.trip(k1), tt.trip(k2));
          if (sg > 0) os.force(j, h2, h1);
          if (sg < 0) os.force(j, h1, h2);
        }
      }
    }
  }
  return os;
}

}  // namespace detail

namespace {

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

std::vector<int> type_counts(const MilpInstance& m, const std::vector<int>& units) {
  std::vector<int> c(m.fleet().types.size(), 0);
  for (int h : units) ++c[m.units()[h].type];
  return c;
}

std::vector<std::vector<int>> footprints(const MilpInstance& m, const SearchNode& node) {
  std::vector<std::vector<int>> fp(m.num_units());
  for (int v : node.fixed_one) {
    const Variable& var = m.variables()[v];
    if (var.cls == VarClass::kX) fp[var.unit].push_back(2 * var.arc + 1);
  }
  for (int v : node.fixed_zero) {
    const Variable& var = m.variables()[v];
    if (var.cls == VarClass::kX) fp[var.unit].push_back(2 * var.arc);
  }
  for (auto& f : fp) std::sort(f.begin(), f.end());
  for (int h : node.must_use) fp[h].push_back(-1);
  return fp;
}

std::vector<Orbit> orbits_of(const MilpInstance& m, const SearchNode& node, const SearchState& s) {
  auto fp = footprints(m, node);
  std::map<std::tuple<int, int, std::vector<int>>, size_t> index;
  std::vector<Orbit> out;
  for (const auto& c : s.candidates) {
    int t = m.units()[c.unit].type;
    auto key = std::make_tuple(c.arc, t, fp[c.unit]);
    auto it = index.find(key);
    if (it == index.end()) {
      index[key] = out.size();
      out.push_back({c.arc, t, {c.var}});
    } else {
      out[it->second].members.push_back(c.var);
    }
  }
  return out;
}

int type_family_count(const FleetConfig& fleet, int t) {
  int c = 0;
  for (const auto& f : fleet.families) c += std::find(f.types.begin(), f.types.end(), t) != f.types.end();
  return c;
}

BranchDecision decide(const MilpInstance& m, const SearchNode& node, const SearchState& s,
                      const SolverOptions& opts) {
  BranchDecision d;
  const SchedulingGraph& g = m.graph();
  if (s.infeasible) return d;
  if (s.current < 0) {
    auto os = detail::order_problem(m, s, g.num_trips(), true);
    if (auto f = os.first_free()) {
      d.kind = BranchKind::kTheta;
      std::tie(d.trip, d.unit_a, d.unit_b) = *f;
    }
    return d;
  }
  auto orbits = orbits_of(m, node, s);
  for (const auto& o : orbits) d.orbit_sizes.push_back(o.size());
  const int j = s.current;
  const FleetConfig& fleet = m.fleet();
  int have = 0;
  for (int h : s.on_trip[j]) have += fleet.types[m.units()[h].type].capacity;
  const int residual = g.timetable().trip(j).demand - have;
  int maxcap = 0;
  for (const auto& c : s.candidates) maxcap = std::max(maxcap, fleet.types[m.units()[c.unit].type].capacity);

  std::vector<const Orbit*> sign_on, turn;
  for (const auto& o : orbits) (g.arc(o.arc).kind == ArcKind::kSignOn ? sign_on : turn).push_back(&o);
  auto uid = [&](const Orbit* o) { return m.variables()[o->representative()].unit; };
  std::sort(sign_on.begin(), sign_on.end(), [&](const Orbit* a, const Orbit* b) {
    auto key = [&](const Orbit* o) {
      const UnitType& ut = fleet.types[o->type];
      return std::make_tuple(-ut.fleet_size, -type_family_count(fleet, o->type), o->type, uid(o));
    };
    return key(a) < key(b);
  });
  std::sort(turn.begin(), turn.end(), [&](const Orbit* a, const Orbit* b) {
    auto key = [&](const Orbit* o) {
      const Arc& arc = g.arc(o->arc);
      return std::make_tuple(arc.empty_running, arc.slack, arc.id, uid(o));
    };
    return key(a) < key(b);
  });
  const Orbit* pick = nullptr;
  if (residual > maxcap && !sign_on.empty()) {
    pick = sign_on.front();
  } else if (!turn.empty()) {
    pick = turn.front();
  } else {
    pick = sign_on.front();
  }
  d.orbit = *pick;
  d.trip = j;
  d.unit_a = uid(pick);
  bool fresh = g.arc(pick->arc).kind == ArcKind::kSignOn;
  if (fresh && opts.aggregate && !s.must_use[d.unit_a]) {
    d.kind = BranchKind::kAggregate;
  } else {
    d.kind = fresh ? BranchKind::kUnitOrbit : BranchKind::kArcOrbit;
  }
  return d;
}

std::pair<SearchNode, SearchNode> aggregate_branch(const MilpInstance& m, const SearchNode& node,
                                                   const SearchState& s, const Orbit& orbit, bool orbital) {
  const SchedulingGraph& g = m.graph();
  SearchNode left = node, right = node;
  left.depth = right.depth = node.depth + 1;
  left.orbit_partition.clear();
  right.orbit_partition.clear();
  left.must_use.push_back(m.variables()[orbit.representative()].unit);
  std::sort(left.must_use.begin(), left.must_use.end());
  const auto& chrono = g.chronological();
  for (int v : orbit.members) {
    int h = m.variables()[v].unit;
    for (size_t p = s.pos; p < chrono.size(); ++p) {
      int a = g.sign_on_arc(chrono[p]);
      int x = a >= 0 ? m.x(a, h) : -1;
      if (x >= 0 && s.fix[x] != 0) right.fixed_zero.push_back(x);
    }
    if (!orbital) break;
  }
  return {left, right};
}

}  // namespace

std::string BranchDecision::describe() const {
  char buf[128];
  switch (kind) {
    case BranchKind::kNone: return "leaf";
    case BranchKind::kUnitOrbit:
      std::snprintf(buf, sizeof buf, "unit(a%d,h%d)", orbit.arc, unit_a);
      return buf;
    case BranchKind::kArcOrbit:
      std::snprintf(buf, sizeof buf, "arc(a%d,h%d)", orbit.arc, unit_a);
      return buf;
    case BranchKind::kAggregate:
      std::snprintf(buf, sizeof buf, "aggregate(a%d,h%d)", orbit.arc, unit_a);
      return buf;
    case BranchKind::kTheta:
      std::snprintf(buf, sizeof buf, "theta(t%d,h%d,h%d)", trip, unit_a, unit_b);
      return buf;
  }
  return "";
}

const char* to_string(ProofState p) {
  switch (p) {
    case ProofState::kOptimal: return "optimal";
    case ProofState::kFeasible: return "feasible";
    case ProofState::kNone: return "none";
  }
  return "";
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kUnknown: return "unknown";
  }
  return "";
}

SearchNode root_node(const MilpInstance& m, const SolverOptions& opts) {
  SearchNode n;
  for (auto [v, val] : opts.fixings) {
    if (v < 0 || v >= m.num_vars()) throw std::out_of_range("fixing of unknown variable " + std::to_string(v));
    (val ? n.fixed_one : n.fixed_zero).push_back(v);
  }
  return n;
}

SearchState build_state(const MilpInstance& m, const SearchNode& node, int start_pos) {
  const SchedulingGraph& g = m.graph();
  const Timetable& tt = g.timetable();
  const FleetConfig& fleet = m.fleet();
  const int n = g.num_trips(), U = m.num_units();
  SearchState s;
  auto fail = [&](std::string why) {
    if (!s.infeasible) s.reason = std::move(why);
    s.infeasible = true;
  };
  s.fix.assign(m.num_vars(), -1);
  for (int v : node.fixed_zero) s.fix[v] = 0;
  for (int v : node.fixed_one) {
    if (s.fix[v] == 0) fail("variable fixed to both values");
    s.fix[v] = 1;
  }
  s.must_use.assign(U, 0);
  for (int h : node.must_use) s.must_use[h] = 1;
  s.path.assign(U, {});
  s.entry.assign(U, {});
  s.on_trip.assign(n, {});
  s.out_fixed.assign(U, {});
  s.open_at.assign(U, -1);

  std::vector<std::vector<std::pair<int, int>>> in_fixed(U);
  for (int v : node.fixed_one) {
    const Variable& var = m.variables()[v];
    if (var.cls != VarClass::kX) continue;
    const Arc& a = g.arc(var.arc);
    s.out_fixed[var.unit].push_back({a.from, a.id});
    if (g.is_trip(a.to)) in_fixed[var.unit].push_back({g.chrono_position(g.trip_of(a.to)), a.id});
  }
  for (int h = 0; h < U; ++h) {
    auto& of = s.out_fixed[h];
    std::sort(of.begin(), of.end());
    for (size_t k = 1; k < of.size(); ++k) {
      if (of[k].first == of[k - 1].first) fail("unit leaves a node twice");
    }
    auto& in = in_fixed[h];
    std::sort(in.begin(), in.end());
    for (size_t k = 0; k < in.size(); ++k) {
      if (k > 0 && in[k].first == in[k - 1].first) fail("unit enters a trip twice");
      int trip = g.trip_of(g.arc(in[k].second).to);
      s.path[h].push_back(trip);
      s.entry[h].push_back(in[k].second);
      s.on_trip[trip].push_back(h);
    }
    for (size_t k = 0; k < s.path[h].size(); ++k) {
      int from = g.arc(s.entry[h][k]).from;
      if (from == SchedulingGraph::kSource) {
        if (k != 0) fail("unit signs on twice");
        continue;
      }
      int p = g.trip_of(from);
      auto it = std::find(s.path[h].begin(), s.path[h].end(), p);
      if (it != s.path[h].end()) {
        if (static_cast<size_t>(it - s.path[h].begin()) + 1 != k) fail("pinned path skips a trip");
      } else if (k > 0 && g.chrono_position(p) < g.chrono_position(s.path[h][k - 1])) {
        fail("pinned path out of order");
      }
    }
  }
  for (auto& v : s.on_trip) std::sort(v.begin(), v.end());
  if (s.infeasible) return s;

  auto type_of = [&](int h) { return m.units()[h].type; };
  auto set_ok = [&](int j) {
    const auto& on = s.on_trip[j];
    if (!detail::formation_ok(m, j, type_counts(m, on))) return false;
    if (m.coupling_banned_before(j)) {
      for (int h : on) {
        if (entry_at(s, h, j) != entry_at(s, on.front(), j)) return false;
      }
    }
    return true;
  };
  auto can_add = [&](int h, int j, int arc, int prev) {
    const auto& on = s.on_trip[j];
    if (m.coupling_banned_before(j)) {
      for (int u : on) {
        if (entry_at(s, u, j) != arc) return false;
      }
    }
    if (prev >= 0 && m.decoupling_banned_after(prev)) {
      for (int u : s.on_trip[prev]) {
        int o = arc_of(s, u, g.node_of_trip(prev));
        if (o >= 0 && o != arc) return false;
      }
    }
    auto counts = type_counts(m, on);
    ++counts[type_of(h)];
    return detail::formation_ok(m, j, counts);
  };
  auto candidates_for = [&](int j) {
    std::vector<Candidate> out;
    const int pj = g.chrono_position(j);
    for (int h = 0; h < U; ++h) {
      if (contains(s.on_trip[j], h)) continue;
      int prev = -1;
      for (int k : s.path[h]) {
        if (g.chrono_position(k) < pj) prev = k;
      }
      int from = prev < 0 ? SchedulingGraph::kSource : g.node_of_trip(prev);
      if (arc_of(s, h, from) >= 0) continue;
      int arc = prev < 0 ? g.sign_on_arc(j) : g.find_arc(from, g.node_of_trip(j));
      if (arc < 0) continue;
      int var = m.x(arc, h);
      if (var < 0 || s.fix[var] == 0) continue;
      if (!can_add(h, j, arc, prev)) continue;
      out.push_back({h, arc, var});
    }
    return out;
  };
  auto close = [&](int j) {
    int cap = 0;
    for (int h : s.on_trip[j]) cap += fleet.types[type_of(h)].capacity;
    if (cap < tt.trip(j).demand) fail("demand of trip " + tt.trip(j).id + " not covered");
    if (!set_ok(j)) fail("formation rules broken on trip " + tt.trip(j).id);
    for (int h = 0; h < U; ++h) {
      if (arc_of(s, h, g.node_of_trip(j)) >= 0 && !contains(s.on_trip[j], h)) {
        fail("fixed connection leaves trip " + tt.trip(j).id + " which the unit does not serve");
      }
    }
  };

  const auto& chrono = g.chronological();
  s.pos = std::max(0, start_pos);
  while (s.pos < n && !s.infeasible) {
    int j = chrono[s.pos];
    s.candidates = candidates_for(j);
    if (!s.candidates.empty()) {
      s.current = j;
      break;
    }
    close(j);
    ++s.pos;
  }
  if (s.infeasible) return s;
  if (s.pos >= n) s.candidates.clear();

  // realized prefix: cost and open units
  const int limit = s.pos;  // positions <= limit are realized (all when at a leaf)
  for (int h = 0; h < U; ++h) {
    int t = type_of(h);
    int last = -1;
    for (size_t k = 0; k < s.path[h].size(); ++k) {
      int trip = s.path[h][k];
      if (g.chrono_position(trip) > limit) break;
      s.fixed_cost += m.arc_cost(t, s.entry[h][k]) + m.unit_trip_cost(t, trip);
      last = trip;
    }
    if (last < 0) {
      s.open_at[h] = -1;
      if (s.must_use[h] && s.path[h].empty()) {
        bool possible = false;
        for (int p = s.pos; p < n && !possible; ++p) {
          int a = g.sign_on_arc(chrono[p]);
          int x = a >= 0 ? m.x(a, h) : -1;
          possible = x >= 0 && s.fix[x] != 0;
        }
        if (!possible) fail("unit that must be used can no longer sign on");
      }
      continue;
    }
    int o = arc_of(s, h, g.node_of_trip(last));
    if (o >= 0 && g.arc(o).kind == ArcKind::kSignOff) {
      s.open_at[h] = -2;
      s.fixed_cost += m.arc_cost(t, o);
    } else {
      s.open_at[h] = last;
    }
  }
  if (s.infeasible) return s;
  if (s.current >= 0) {
    auto os = detail::order_problem(m, s, limit, false);
    if (!os.solve()) fail("no coupling order fits the fixed connections");
  }
  return s;
}

std::vector<Orbit> compute_orbits(const SearchNode& node, const MilpInstance& m) {
  SearchState s = build_state(m, node);
  if (s.infeasible) return {};
  return orbits_of(m, node, s);
}

std::pair<SearchNode, SearchNode> orbital_branch(const SearchNode& node, const Orbit& orbit, bool orbital) {
  if (orbit.members.empty()) throw std::invalid_argument("empty orbit");
  SearchNode left = node, right = node;
  left.depth = right.depth = node.depth + 1;
  left.orbit_partition.clear();
  right.orbit_partition.clear();
  left.fixed_one.push_back(orbit.representative());
  if (orbital) {
    right.fixed_zero.insert(right.fixed_zero.end(), orbit.members.begin(), orbit.members.end());
  } else {
    right.fixed_zero.push_back(orbit.representative());
  }
  return {left, right};
}

BranchDecision select_branch_target(const SearchNode& node, const MilpInstance& m, const SolverOptions& opts) {
  SearchState s = build_state(m, node);
  return decide(m, node, s, opts);
}

std::optional<Solution> complete_leaf(const MilpInstance& m, const SearchState& s) {
  const SchedulingGraph& g = m.graph();
  const FleetConfig& fleet = m.fleet();
  const int n = g.num_trips(), U = m.num_units();
  if (s.infeasible || s.pos < n) return std::nullopt;
  Solution x(m.num_vars(), 0);
  std::vector<char> used(g.num_arcs(), 0);
  std::vector<std::vector<int>> out_arc(n, std::vector<int>(U, -1));
  for (int h = 0; h < U; ++h) {
    const auto& p = s.path[h];
    if (p.empty()) continue;
    for (size_t k = 0; k < p.size(); ++k) {
      int a = s.entry[h][k];
      int var = m.x(a, h);
      if (var < 0) return std::nullopt;
      x[var] = 1;
      used[a] = 1;
      if (k > 0) out_arc[p[k - 1]][h] = a;
    }
    int off = g.sign_off_arc(p.back());
    int var = off >= 0 ? m.x(off, h) : -1;
    if (var < 0) return std::nullopt;
    x[var] = 1;
    used[off] = 1;
    out_arc[p.back()][h] = off;
  }
  for (int i = 0; i < n; ++i) {
    if (!m.decoupling_banned_after(i)) continue;
    for (int h : s.on_trip[i]) {
      if (out_arc[i][h] != out_arc[i][s.on_trip[i].front()]) return std::nullopt;
    }
  }
  auto os = detail::order_problem(m, s, n, true);
  auto theta = os.solve();
  if (!theta) return std::nullopt;
  for (int j = 0; j < n; ++j) {
    const auto& hs = s.on_trip[j];
    for (size_t p = 0; p < hs.size(); ++p) {
      int v = m.theta(j, hs[p]);
      if (v < 0) return std::nullopt;
      x[v] = (*theta)[j][p];
    }
    for (size_t p = 0; p < hs.size(); ++p) {
      for (size_t q = p + 1; q < hs.size(); ++q) {
        int v = m.pair(j, hs[p], hs[q]);
        if (v >= 0) x[v] = (*theta)[j][p] > (*theta)[j][q] ? 1 : 0;
      }
    }
    // family choice
    int chosen = -1, first = -1;
    auto counts = type_counts(m, hs);
    for (int f = 0; f < static_cast<int>(fleet.families.size()); ++f) {
      int v = m.family_var(j, f);
      if (v < 0) continue;
      if (first < 0) first = v;
      const auto& fr = fleet.families[f];
      int units = 0, cars = 0;
      bool fits = true;
      for (size_t t = 0; t < counts.size(); ++t) {
        if (!counts[t]) continue;
        if (std::find(fr.types.begin(), fr.types.end(), static_cast<int>(t)) == fr.types.end()) fits = false;
        units += counts[t];
        cars += counts[t] * fleet.types[t].num_cars;
      }
      if (fits && units <= fr.max_units && cars <= fr.max_cars) {
        chosen = v;
        break;
      }
    }
    if (chosen < 0) chosen = first;
    if (chosen >= 0) x[chosen] = 1;
  }
  for (int a = 0; a < g.num_arcs(); ++a) {
    if (m.block(a) >= 0) x[m.block(a)] = used[a];
  }
  // a banned trip nobody serves still needs one block marked
  auto fill_ban = [&](const std::vector<int>& arcs) {
    int sum = 0;
    for (int a : arcs) sum += m.block(a) >= 0 ? x[m.block(a)] : 0;
    if (sum > 0) return;
    for (int a : arcs) {
      if (m.block(a) >= 0) {
        x[m.block(a)] = 1;
        return;
      }
    }
  };
  for (int j = 0; j < n; ++j) {
    if (m.coupling_banned_before(j)) fill_ban(g.delta_minus(g.node_of_trip(j)));
    if (m.decoupling_banned_after(j)) fill_ban(g.delta_plus(g.node_of_trip(j)));
  }
  for (int v = 0; v < m.num_vars(); ++v) {
    if (s.fix[v] >= 0 && x[v] != s.fix[v]) return std::nullopt;
  }
  if (!m.violated_rows(x).empty()) return std::nullopt;
  return x;
}

namespace {

struct Open {
  SearchNode node;
  int pos = 0;
  BranchDecision decision;
  int64_t seq = 0;
};

struct Worse {
  bool operator()(const std::shared_ptr<Open>& a, const std::shared_ptr<Open>& b) const {
    if (a->node.bound != b->node.bound) return a->node.bound > b->node.bound;
    if (a->node.depth != b->node.depth) return a->node.depth < b->node.depth;
    return a->seq > b->seq;
  }
};

std::string fmt_bound(double b) {
  if (!std::isfinite(b)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", b);
  return buf;
}

}  // namespace

SolveResult solve(const MilpInstance& m, RelaxationBackend* backend, const SolverOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  SolveResult res;
  std::unique_ptr<CombinatorialBound> own;
  if (!backend) {
    own = std::make_unique<CombinatorialBound>(m);
    backend = own.get();
  }
  const double tol = 1e-6;
  int64_t seq = 0;
  std::vector<std::shared_ptr<Open>> stack;
  std::priority_queue<std::shared_ptr<Open>, std::vector<std::shared_ptr<Open>>, Worse> heap;
  bool best_first = false;

  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };
  auto out_of_budget = [&] {
    if (opts.node_budget > 0 && res.stats.nodes >= opts.node_budget) return true;
    if (opts.time_budget_s > 0 && elapsed() > opts.time_budget_s) return true;
    return false;
  };
  auto log = [&](const SearchNode& node, const std::vector<int>& sizes, const std::string& what) {
    if (!opts.log_nodes) return;
    std::string s = std::to_string(node.depth) + "," + fmt_bound(node.bound) + ",";
    for (size_t k = 0; k < sizes.size(); ++k) s += (k ? ";" : "") + std::to_string(sizes[k]);
    res.node_log.push_back(s + "," + what);
  };

  // Evaluates a node; returns it when it still needs branching.
  auto evaluate = [&](SearchNode node, int start_pos, double parent_bound) -> std::shared_ptr<Open> {
    ++res.stats.nodes;
    res.stats.max_depth = std::max(res.stats.max_depth, node.depth);
    SearchState s = build_state(m, node, start_pos);
    node.bound = parent_bound;
    if (s.infeasible) {
      ++res.stats.pruned_infeasible;
      log(node, {}, "infeasible");
      return nullptr;
    }
    if (s.current < 0) {
      ++res.stats.leaves;
      auto sol = complete_leaf(m, s);
      if (!sol) {
        ++res.stats.pruned_infeasible;
        log(node, {}, "infeasible");
        return nullptr;
      }
      double obj = m.evaluate(*sol);
      node.bound = obj;
      log(node, {}, "leaf");
      if (opts.check_oracle) {
        auto v = verify(decode(*sol, m), m.graph().timetable(), m.fleet(), OracleOptions{m.options().features});
        if (!v.empty()) {
          throw InvariantError("solver produced a schedule the oracle rejects: " + v.front().rule + " " +
                               v.front().explanation);
        }
      }
      if (!res.incumbent || obj < res.incumbent->objective - tol) {
        res.incumbent = Incumbent{*sol, obj, ProofState::kFeasible};
        ++res.stats.incumbents;
      }
      return nullptr;
    }
    BoundResult b = backend->bound(m, node, s);
    if (b.infeasible) {
      ++res.stats.pruned_infeasible;
      log(node, {}, "infeasible");
      return nullptr;
    }
    node.bound = std::max(parent_bound, b.value);
    if (node.depth == 0) res.stats.root_bound = node.bound;
    if (!opts.enumerate && res.incumbent && node.bound >= res.incumbent->objective - tol) {
      ++res.stats.pruned_bound;
      log(node, {}, "pruned");
      return nullptr;
    }
    auto rec = std::make_shared<Open>();
    rec->decision = decide(m, node, s, opts);
    rec->pos = s.pos;
    node.orbit_partition = orbits_of(m, node, s);
    rec->node = std::move(node);
    rec->seq = seq++;
    log(rec->node, rec->decision.orbit_sizes, rec->decision.describe());
    return rec;
  };

  auto push = [&](std::shared_ptr<Open> rec) {
    if (best_first) {
      heap.push(std::move(rec));
    } else {
      stack.push_back(std::move(rec));
    }
  };

  const double lowest = -std::numeric_limits<double>::infinity();
  if (auto root = evaluate(root_node(m, opts), 0, lowest)) push(root);
  while (true) {
    if (!best_first && !opts.enumerate && res.incumbent) {
      best_first = true;
      for (auto& r : stack) heap.push(r);
      stack.clear();
    }
    std::shared_ptr<Open> cur;
    if (best_first) {
      if (heap.empty()) break;
      cur = heap.top();
      heap.pop();
    } else {
      if (stack.empty()) break;
      cur = stack.back();
      stack.pop_back();
    }
    if (!opts.enumerate && res.incumbent && cur->node.bound >= res.incumbent->objective - tol) {
      ++res.stats.pruned_bound;
      continue;
    }
    if (out_of_budget()) {
      res.stats.budget_exhausted = true;
      break;
    }
    SearchState s;
    std::pair<SearchNode, SearchNode> kids;
    if (cur->decision.kind == BranchKind::kAggregate) {
      s = build_state(m, cur->node, cur->pos);
      kids = aggregate_branch(m, cur->node, s, cur->decision.orbit, opts.orbital);
    } else {
      kids = orbital_branch(cur->node, cur->decision.orbit, opts.orbital);
    }
    auto l = evaluate(std::move(kids.first), cur->pos, cur->node.bound);
    auto r = evaluate(std::move(kids.second), cur->pos, cur->node.bound);
    // depth-first: the child with the lower bound is explored first
    if (l && r && !best_first && r->node.bound < l->node.bound) std::swap(l, r);
    if (r) push(r);
    if (l) push(l);
  }
  res.stats.seconds = elapsed();
  if (res.incumbent) {
    if (res.stats.budget_exhausted) {
      res.status = SolveStatus::kFeasible;
      double best = res.incumbent->objective;
      for (const auto& r : stack) best = std::min(best, r->node.bound);
      if (!heap.empty()) best = std::min(best, heap.top()->node.bound);
      res.certificate = "budget exhausted; incumbent " + fmt_bound(res.incumbent->objective) + ", best bound " +
                        fmt_bound(best);
    } else {
      res.status = SolveStatus::kOptimal;
      res.incumbent->proof = ProofState::kOptimal;
      res.certificate = "search tree exhausted after " + std::to_string(res.stats.nodes) + " nodes; optimum " +
                        fmt_bound(res.incumbent->objective);
    }
  } else if (res.stats.budget_exhausted) {
    res.status = SolveStatus::kUnknown;
    res.certificate = "budget exhausted before any feasible schedule";
  } else {
    res.status = SolveStatus::kInfeasible;
    res.certificate = "search tree exhausted after " + std::to_string(res.stats.nodes) +
                      " nodes without a feasible schedule";
  }
  return res;
}

}  // namespace tus
