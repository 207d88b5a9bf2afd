#include "tus/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>

#include <json.hpp>

#include "tus/errors.hpp"

namespace tus {

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::kCouplingOrder: return "coupling-order";
    case ViolationKind::kDecouplingOrder: return "decoupling-order";
    case ViolationKind::kPropagation: return "propagation";
    case ViolationKind::kBlockage: return "blockage";
    case ViolationKind::kCoverage: return "coverage";
    case ViolationKind::kCapacity: return "capacity";
    case ViolationKind::kReuse: return "reuse";
    case ViolationKind::kFleet: return "fleet";
    case ViolationKind::kBan: return "ban";
    case ViolationKind::kTime: return "time";
  }
  return "";
}

namespace {

std::optional<Minutes> connection_need(const Trip& a, const Trip& b, const FleetConfig& fleet) {
  Minutes need = fleet.default_min_turnaround;
  for (const auto& st : fleet.stations) {
    if (st.station == a.arr_station && st.min_turnaround) need = *st.min_turnaround;
  }
  if (a.arr_station == b.dep_station) return need;
  for (const auto& [key, minutes] : fleet.empty_runs.entries()) {
    if (key.first == a.arr_station && key.second == b.dep_station) return need + minutes;
  }
  return std::nullopt;
}

const StationRules* rules_at(const FleetConfig& fleet, const std::string& name) {
  for (const auto& st : fleet.stations) {
    if (st.station == name) return &st;
  }
  return nullptr;
}

bool shunted(const Trip& a, const Trip& b, const FleetConfig& fleet) {
  if (fleet.shunt_allowed.count({a.id, b.id})) return true;
  const StationRules* st = rules_at(fleet, a.arr_station);
  return a.arr_station == b.dep_station && st && st->shunt_min_dwell &&
         b.dep_time - a.arr_time >= *st->shunt_min_dwell;
}

bool permitted(const FleetConfig& fleet, int type, const Trip& t) {
  auto it = fleet.restrictions.find(t.id);
  if (it == fleet.restrictions.end()) return true;
  const auto& ids = it->second;
  return std::find(ids.begin(), ids.end(), fleet.types[type].id) != ids.end();
}

}  // namespace

std::vector<Violation> verify(const UnitSchedule& sch, const Timetable& tt, const FleetConfig& fleet,
                              const OracleOptions& opts) {
  const int n = tt.size();
  const int U = sch.num_units();
  if (static_cast<int>(sch.unit_type.size()) != U) throw StructuralError("unit types and paths differ in length");
  if (static_cast<int>(sch.placements.size()) != n) throw StructuralError("placements do not match the timetable");
  for (int h = 0; h < U; ++h) {
    if (sch.unit_type[h] < 0 || sch.unit_type[h] >= static_cast<int>(fleet.types.size())) {
      throw StructuralError("unit " + std::to_string(h) + " has an unknown type");
    }
    for (int j : sch.paths[h]) {
      if (j < 0 || j >= n) throw StructuralError("unit " + std::to_string(h) + " runs unknown trip " + std::to_string(j));
    }
  }
  for (const auto& pl : sch.placements) {
    for (const auto& p : pl) {
      if (p.unit < 0 || p.unit >= U) throw StructuralError("placement of unknown unit " + std::to_string(p.unit));
    }
  }

  std::vector<Violation> out;
  auto add = [&](std::string rule, ViolationKind kind, int trip, std::string station, std::vector<int> units,
                 std::string why) {
    out.push_back({std::move(rule), kind, trip, std::move(station), std::move(units), std::move(why)});
  };
  auto id = [&](int j) { return tt.trip(j).id; };

  // prev/next trip per (unit, trip); -1 = depot
  std::vector<std::map<int, int>> prev(U), next(U);
  std::vector<std::set<int>> runs(n);
  std::vector<int> used_of_type(fleet.types.size(), 0);
  for (int h = 0; h < U; ++h) {
    const auto& p = sch.paths[h];
    if (!p.empty()) ++used_of_type[sch.unit_type[h]];
    std::set<int> seen;
    for (size_t k = 0; k < p.size(); ++k) {
      int j = p[k];
      if (!seen.insert(j).second) {
        add("structural.reuse", ViolationKind::kReuse, j, tt.trip(j).dep_station, {h},
            "unit runs trip " + id(j) + " twice");
        continue;
      }
      runs[j].insert(h);
      prev[h][j] = k > 0 ? p[k - 1] : -1;
      next[h][j] = k + 1 < p.size() ? p[k + 1] : -1;
      if (!permitted(fleet, sch.unit_type[h], tt.trip(j))) {
        add("structural.restriction", ViolationKind::kCapacity, j, tt.trip(j).dep_station, {h},
            "type " + fleet.types[sch.unit_type[h]].id + " may not run trip " + id(j));
      }
      if (k > 0) {
        const Trip& a = tt.trip(p[k - 1]);
        const Trip& b = tt.trip(j);
        auto need = connection_need(a, b, fleet);
        if (!need) {
          add("structural.empty_run", ViolationKind::kTime, j, a.arr_station, {h},
              "no empty run from " + a.arr_station + " to " + b.dep_station);
        } else if (b.dep_time - a.arr_time < *need) {
          add("structural.turnaround", ViolationKind::kTime, j, b.dep_station, {h},
              "trip " + a.id + " arrives at " + std::to_string(a.arr_time) + ", trip " + b.id + " leaves at " +
                  std::to_string(b.dep_time) + ", " + std::to_string(*need) + " min needed");
        }
      }
    }
  }
  for (size_t t = 0; t < fleet.types.size(); ++t) {
    if (used_of_type[t] > fleet.types[t].fleet_size) {
      add("structural.fleet", ViolationKind::kFleet, -1, "", {},
          std::to_string(used_of_type[t]) + " units of type " + fleet.types[t].id + " used, " +
              std::to_string(fleet.types[t].fleet_size) + " available");
    }
  }

  // theta per (trip, unit)
  std::vector<std::map<int, int>> theta(n);
  for (int j = 0; j < n; ++j) {
    const Trip& tj = tt.trip(j);
    std::set<int> placed;
    std::vector<int> thetas;
    for (const auto& p : sch.placements[j]) {
      placed.insert(p.unit);
      theta[j][p.unit] = p.theta;
      thetas.push_back(p.theta);
    }
    if (placed != runs[j] || placed.size() != sch.placements[j].size()) {
      throw StructuralError("placements on trip " + id(j) + " disagree with unit paths");
    }
    std::sort(thetas.begin(), thetas.end());
    for (size_t k = 0; k < thetas.size(); ++k) {
      if (thetas[k] != static_cast<int>(k) + 1) {
        throw StructuralError("coupling orders on trip " + id(j) + " are not 1.." + std::to_string(thetas.size()));
      }
    }
    int seats = 0, length = 0;
    std::map<int, int> count;
    for (int h : runs[j]) {
      const UnitType& ut = fleet.types[sch.unit_type[h]];
      seats += ut.capacity;
      length += ut.car_length;
      ++count[sch.unit_type[h]];
    }
    if (seats < tj.demand) {
      add("structural.demand", runs[j].empty() ? ViolationKind::kCoverage : ViolationKind::kCapacity, j, tj.dep_station, std::vector<int>(runs[j].begin(), runs[j].end()),
          std::to_string(seats) + " seats for demand " + std::to_string(tj.demand));
    }
    if (opts.features.platform_length && !runs[j].empty()) {
      for (const auto& st : {tj.dep_station, tj.arr_station}) {
        const StationRules* r = rules_at(fleet, st);
        if (r && r->platform_length && length > *r->platform_length) {
          add("structural.platform", ViolationKind::kCapacity, j, st, std::vector<int>(runs[j].begin(), runs[j].end()),
              "train of " + std::to_string(length) + " m at a " + std::to_string(*r->platform_length) + " m platform");
        }
      }
    }
    if (opts.features.families && !fleet.families.empty() && !runs[j].empty()) {
      bool any = false;
      for (const auto& f : fleet.families) {
        int units = 0, cars = 0;
        bool fits = true;
        for (auto [t, c] : count) {
          if (std::find(f.types.begin(), f.types.end(), t) == f.types.end()) fits = false;
          units += c;
          cars += c * fleet.types[t].num_cars;
        }
        any = any || (fits && units <= f.max_units && cars <= f.max_cars);
      }
      if (!any) {
        add("structural.family", ViolationKind::kCapacity, j, tj.dep_station,
            std::vector<int>(runs[j].begin(), runs[j].end()), "no family admits the formation of trip " + id(j));
      }
    }
  }

  // coupling / decoupling bans and coupling time
  for (int j = 0; j < n; ++j) {
    const Trip& tj = tt.trip(j);
    std::set<int> from, to;
    for (int h : runs[j]) {
      from.insert(prev[h][j]);
      to.insert(next[h][j]);
    }
    const StationRules* dep = rules_at(fleet, tj.dep_station);
    const StationRules* arr = rules_at(fleet, tj.arr_station);
    if (dep && dep->coupling_banned_departure && from.size() > 1) {
      add("structural.coupling_ban", ViolationKind::kBan, j, tj.dep_station,
          std::vector<int>(runs[j].begin(), runs[j].end()), "units join before trip " + id(j) + " where coupling is banned");
    }
    if (arr && arr->coupling_banned_arrival && to.size() > 1) {
      add("structural.decoupling_ban", ViolationKind::kBan, j, tj.arr_station,
          std::vector<int>(runs[j].begin(), runs[j].end()), "units split after trip " + id(j) + " where decoupling is banned");
    }
  }
  if (opts.features.blockflow) {
    std::set<std::pair<int, int>> links;
    for (int h = 0; h < U; ++h) {
      const auto& p = sch.paths[h];
      for (size_t k = 1; k < p.size(); ++k) links.insert({p[k - 1], p[k]});
    }
    for (auto [i, j] : links) {
      const Trip& a = tt.trip(i);
      const Trip& b = tt.trip(j);
      const StationRules* sa = rules_at(fleet, a.arr_station);
      const StationRules* sb = rules_at(fleet, b.dep_station);
      if ((sa && sa->coupling_banned_arrival) || (sb && sb->coupling_banned_departure)) continue;
      Minutes td = sa ? sa->decouple_time : 0, tc = sb ? sb->couple_time : 0;
      auto need = connection_need(a, b, fleet);
      if (!need) continue;
      std::set<int> outs, ins;
      for (int h : runs[i]) outs.insert(next[h][i]);
      for (int h : runs[j]) ins.insert(prev[h][j]);
      Minutes used = td * static_cast<Minutes>(outs.size() - 1) + tc * static_cast<Minutes>(ins.size() - 1);
      Minutes slack = b.dep_time - a.arr_time - *need;
      if (used > slack) {
        add("structural.coupling_time", ViolationKind::kTime, j, b.dep_station, {},
            "splitting and joining between " + a.id + " and " + b.id + " takes " + std::to_string(used) +
                " min, slack is " + std::to_string(slack));
      }
    }
  }

  // coupling-order casework; front = smaller theta
  auto front = [&](int j, int a, int b) { return theta[j].count(a) && theta[j].count(b) && theta[j][a] < theta[j][b]; };
  for (int j = 0; j < n; ++j) {
    const Trip& tj = tt.trip(j);
    std::vector<int> hs(runs[j].begin(), runs[j].end());
    for (size_t p = 0; p < hs.size(); ++p) {
      for (size_t q = p + 1; q < hs.size(); ++q) {
        int a = hs[p], b = hs[q];
        // arriving side
        int ia = prev[a][j], ib = prev[b][j];
        bool la = ia >= 0 && !shunted(tt.trip(ia), tj, fleet);
        bool lb = ib >= 0 && !shunted(tt.trip(ib), tj, fleet);
        if (la && lb) {
          const Trip& ta = tt.trip(ia);
          const Trip& tb = tt.trip(ib);
          if (ia == ib) {
            bool keep = ta.direction == tj.direction;
            if (front(ia, a, b) != (keep ? front(j, a, b) : front(j, b, a))) {
              add(keep ? "T3.row7" : "T3.row8", ViolationKind::kPropagation, j, tj.dep_station,
                  {a, b},
                  keep ? "units staying coupled from " + ta.id + " to " + id(j) + " changed order"
                       : "units staying coupled from " + ta.id + " to " + id(j) + " must swap ends");
            }
          } else if (ta.direction != tb.direction) {
            int rear = ta.direction == tj.direction ? a : b;
            int other = rear == a ? b : a;
            if (!front(j, other, rear)) {
              add(rear == a ? "T3.row2" : "T3.row3", ViolationKind::kCouplingOrder, j, tj.dep_station, {a, b},
                  "unit " + std::to_string(rear) + " arrives running the way trip " + id(j) + " leaves and must be at the rear");
            }
          } else if (ta.arr_time != tb.arr_time) {
            int early = ta.arr_time < tb.arr_time ? a : b;
            int late = early == a ? b : a;
            bool early_front = ta.direction == tj.direction;
            if (early_front ? !front(j, early, late) : !front(j, late, early)) {
              add(early_front ? "T3.row4" : "T3.row5", ViolationKind::kCouplingOrder, j, tj.dep_station, {a, b},
                  std::string("unit ") + std::to_string(early) + " arrives first and must be at the " +
                      (early_front ? "front" : "rear"));
            }
          }
        }
        // departing side
        int na = next[a][j], nb = next[b][j];
        bool da = na >= 0 && !shunted(tj, tt.trip(na), fleet);
        bool db = nb >= 0 && !shunted(tj, tt.trip(nb), fleet);
        if (da && db && na != nb) {
          const Trip& ta = tt.trip(na);
          const Trip& tb = tt.trip(nb);
          if (ta.direction != tb.direction) {
            int lead = ta.direction == tj.direction ? a : b;
            int other = lead == a ? b : a;
            if (!front(j, lead, other)) {
              add(lead == a ? "T3.row10" : "T3.row11", ViolationKind::kBlockage, j, tj.arr_station, {a, b},
                  "unit " + std::to_string(other) + " is blocked: unit " + std::to_string(lead) +
                      " continues the way trip " + id(j) + " ran and must be at the front");
            }
          } else if (ta.dep_time != tb.dep_time) {
            int early = ta.dep_time < tb.dep_time ? a : b;
            int late = early == a ? b : a;
            bool early_front = ta.direction == tj.direction;
            if (early_front ? !front(j, early, late) : !front(j, late, early)) {
              add(early_front ? "T3.row12" : "T3.row13", ViolationKind::kDecouplingOrder, j, tj.arr_station, {a, b},
                  std::string("unit ") + std::to_string(early) + " leaves first and must be at the " +
                      (early_front ? "front" : "rear"));
            }
          }
        }
      }
    }
  }
  return out;
}

namespace {

template <class T>
UnitSchedule decode_impl(const std::vector<T>& x, const MilpInstance& m) {
  if (static_cast<int>(x.size()) != m.num_vars()) throw DecodeError("solution has the wrong length");
  auto value = [&](int k) -> int64_t {
    double v = static_cast<double>(x[k]);
    double r = std::round(v);
    if (std::abs(v - r) > 1e-6) throw DecodeError("fractional value for " + m.variables()[k].name);
    return static_cast<int64_t>(r);
  };
  const SchedulingGraph& g = m.graph();
  const int U = m.num_units(), n = g.num_trips();
  UnitSchedule s;
  s.paths.assign(U, {});
  s.placements.assign(n, {});
  for (const auto& u : m.units()) s.unit_type.push_back(u.type);
  std::vector<std::map<int, int>> out(U);  // node -> arc
  for (int k = 0; k < m.num_vars(); ++k) {
    const Variable& v = m.variables()[k];
    if (v.cls != VarClass::kX || value(k) == 0) continue;
    int from = g.arc(v.arc).from;
    if (!out[v.unit].emplace(from, v.arc).second) {
      throw DecodeError("unit " + std::to_string(v.unit) + " leaves node " + g.node_label(from) + " twice");
    }
  }
  for (int h = 0; h < U; ++h) {
    int node = SchedulingGraph::kSource;
    size_t steps = 0;
    while (true) {
      auto it = out[h].find(node);
      if (it == out[h].end()) {
        if (node != SchedulingGraph::kSource) throw DecodeError("path of unit " + std::to_string(h) + " breaks off");
        break;
      }
      node = g.arc(it->second).to;
      ++steps;
      if (node == g.sink()) break;
      s.paths[h].push_back(g.trip_of(node));
    }
    if (steps != out[h].size()) throw DecodeError("unit " + std::to_string(h) + " has arcs off its path");
    for (int j : s.paths[h]) {
      int th = m.theta(j, h);
      s.placements[j].push_back({h, th >= 0 ? static_cast<int>(value(th)) : 0});
    }
  }
  for (int j = 0; j < n; ++j) {
    if (s.placements[j].empty() && g.timetable().trip(j).demand > 0) {
      throw DecodeError("trip " + g.timetable().trip(j).id + " is not covered");
    }
  }
  return s;
}

}  // namespace

UnitSchedule decode(const Solution& x, const MilpInstance& m) { return decode_impl(x, m); }
UnitSchedule decode(const std::vector<double>& x, const MilpInstance& m) { return decode_impl(x, m); }

std::string violations_to_jsonl(const std::vector<Violation>& v, const Timetable& tt) {
  std::string s;
  for (const auto& e : v) {
    nlohmann::json j;
    j["rule"] = e.rule;
    j["kind"] = to_string(e.kind);
    j["trip"] = e.trip >= 0 && e.trip < tt.size() ? nlohmann::json(tt.trip(e.trip).id) : nlohmann::json(nullptr);
    j["station"] = e.station;
    j["units"] = e.units;
    j["explanation"] = e.explanation;
    s += j.dump() + "\n";
  }
  return s;
}

}  // namespace tus
