#include "tus/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tus/errors.hpp"

namespace tus {

const char* row_family_name(RowFamily f) {
  switch (f) {
    case RowFamily::kReuse: return "reuse";
    case RowFamily::kFlowBalance: return "flow_balance";
    case RowFamily::kFleet: return "fleet";
    case RowFamily::kDemand: return "demand";
    case RowFamily::kFamilyUnits: return "family_units";
    case RowFamily::kFamilyCars: return "family_cars";
    case RowFamily::kFamilyChoice: return "family_choice";
    case RowFamily::kPlatform: return "platform_length";
    case RowFamily::kBlockLink: return "block_link";
    case RowFamily::kCouplingTime: return "coupling_time";
    case RowFamily::kCouplingBan: return "coupling_ban";
    case RowFamily::kDecouplingBan: return "decoupling_ban";
    case RowFamily::kCoupleOpposite: return "couple_opposite";
    case RowFamily::kCoupleSame: return "couple_same";
    case RowFamily::kDecoupleOpposite: return "decouple_opposite";
    case RowFamily::kDecoupleSame: return "decouple_same";
    case RowFamily::kPropagation: return "order_propagation";
    case RowFamily::kOrderPresence: return "order_presence";
    case RowFamily::kOrderCount: return "order_count";
    case RowFamily::kOrderActivation: return "order_activation";
    case RowFamily::kOrderDistinct: return "order_distinct";
  }
  return "?";
}

bool is_ordering_family(RowFamily f) {
  return f == RowFamily::kCoupleOpposite || f == RowFamily::kCoupleSame ||
         f == RowFamily::kDecoupleOpposite || f == RowFamily::kDecoupleSame ||
         f == RowFamily::kPropagation;
}

namespace {

const char* class_name(VarClass c) {
  switch (c) {
    case VarClass::kX: return "x";
    case VarClass::kTheta: return "theta";
    case VarClass::kPair: return "u";
    case VarClass::kFamily: return "y";
    case VarClass::kBlock: return "z";
  }
  return "?";
}

int sgn(int v) { return (v > 0) - (v < 0); }

void normalize(LinConstraint& r) {
  std::sort(r.terms.begin(), r.terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> out;
  for (const auto& t : r.terms) {
    if (!out.empty() && out.back().var == t.var) {
      out.back().coef += t.coef;
    } else {
      out.push_back(t);
    }
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const Term& t) { return t.coef == 0; }), out.end());
  r.terms = std::move(out);
}

double lookup(const std::map<std::pair<std::string, std::string>, double>& m, const std::string& a,
              const std::string& b, double fallback) {
  auto it = m.find({a, b});
  return it == m.end() ? fallback : it->second;
}

}  // namespace

int MilpInstance::pair(int trip, int h1, int h2) const {
  if (h1 > h2) std::swap(h1, h2);
  auto it = pair_.find({trip, h1, h2});
  return it == pair_.end() ? -1 : it->second;
}

int MilpInstance::family_var(int trip, int family) const {
  auto it = family_.find({trip, family});
  return it == family_.end() ? -1 : it->second;
}

double MilpInstance::unit_trip_cost(int type, int trip) const {
  const Trip& t = graph_->timetable().trip(trip);
  const std::string& tid = fleet_.types.at(type).id;
  double mu = lookup(weights_.mileage, tid, t.id, static_cast<double>(t.duration()));
  double pi = lookup(weights_.trip_preference, tid, t.id, 0.0);
  return weights_.W(2) * mu - weights_.W(5) * pi;
}

double MilpInstance::arc_cost(int type, int arc) const {
  const Arc& a = graph_->arc(arc);
  const std::string& tid = fleet_.types.at(type).id;
  double c = 0;
  switch (a.kind) {
    case ArcKind::kSignOn:
      c += weights_.W(1);
      c -= weights_.W(6) * lookup(weights_.arc_preference, tid, "on>" + graph_->node_label(a.to), 0.0);
      break;
    case ArcKind::kSignOff:
      c -= weights_.W(6) * lookup(weights_.arc_preference, tid, graph_->node_label(a.from) + ">off", 0.0);
      break;
    case ArcKind::kTurnaround:
      if (a.empty_running) c += weights_.W(3);
      c -= weights_.W(4) * lookup(weights_.long_gap, tid,
                                  graph_->node_label(a.from) + ">" + graph_->node_label(a.to), 0.0);
      break;
  }
  return c;
}

bool MilpInstance::may_couple(int t1, int t2) const {
  if (!options_.features.families || fleet_.families.empty()) return true;
  for (const auto& f : fleet_.families) {
    bool a = std::find(f.types.begin(), f.types.end(), t1) != f.types.end();
    bool b = std::find(f.types.begin(), f.types.end(), t2) != f.types.end();
    if (a && b) return true;
  }
  return false;
}

bool MilpInstance::coupling_banned_before(int trip) const {
  const StationRules* s = fleet_.station(graph_->timetable().trip(trip).dep_station);
  return s && s->coupling_banned_departure;
}

bool MilpInstance::decoupling_banned_after(int trip) const {
  const StationRules* s = fleet_.station(graph_->timetable().trip(trip).arr_station);
  return s && s->coupling_banned_arrival;
}

std::optional<int> MilpInstance::platform_limit(int trip) const {
  if (!options_.features.platform_length) return std::nullopt;
  const Trip& t = graph_->timetable().trip(trip);
  std::optional<int> lim;
  for (const auto& st : {t.dep_station, t.arr_station}) {
    const StationRules* s = fleet_.station(st);
    if (s && s->platform_length) lim = std::min(lim.value_or(*s->platform_length), *s->platform_length);
  }
  return lim;
}

double MilpInstance::evaluate(const Solution& s) const {
  double v = 0;
  for (int k = 0; k < num_vars(); ++k) v += obj_[k] * static_cast<double>(s.at(k));
  return v;
}

bool MilpInstance::row_satisfied(int row, const Solution& s) const {
  const auto& r = rows_.at(row);
  int64_t lhs = 0;
  for (const auto& t : r.terms) lhs += t.coef * s.at(t.var);
  switch (r.sense) {
    case Sense::kLe: return lhs <= r.rhs;
    case Sense::kEq: return lhs == r.rhs;
    case Sense::kGe: return lhs >= r.rhs;
  }
  return false;
}

std::vector<int> MilpInstance::violated_rows(const Solution& s) const {
  if (static_cast<int>(s.size()) != num_vars()) throw std::invalid_argument("solution length mismatch");
  std::vector<int> out;
  for (int k = 0; k < num_vars(); ++k) {
    if (s[k] < vars_[k].lo || s[k] > vars_[k].hi) {
      out.push_back(-1 - k);  // bound violation, encoded negative
    }
  }
  for (int r = 0; r < num_rows(); ++r) {
    if (!row_satisfied(r, s)) out.push_back(r);
  }
  return out;
}

MilpInstance build_model(const SchedulingGraph& g, const FleetConfig& fleet, const ModelOptions& opts) {
  if (fleet.types.empty() || fleet.total_fleet() == 0) throw ModelError("empty fleet");
  const int n = g.num_trips();
  if (n > 0) {
    bool any = false;
    for (int j = 0; j < n; ++j) any = any || g.sign_on_arc(j) >= 0;
    if (!any) throw ModelError("graph has no sign-on arcs");
  }
  const Timetable& tt = g.timetable();
  for (const auto& t : tt.trips()) {
    if (t.direction != 1 && t.direction != -1) throw ModelError("trip " + t.id + " has no direction");
  }

  MilpInstance m;
  m.graph_ = std::make_shared<SchedulingGraph>(g);
  m.fleet_ = fleet;
  m.weights_ = opts.weights.value_or(fleet.weights);
  m.options_ = opts;
  m.units_ = fleet.units();
  const int U = m.num_units();
  const int A = g.num_arcs();
  const int total = fleet.total_fleet();
  const bool use_families = opts.features.families && !fleet.families.empty();

  int umax = total;
  if (!fleet.families.empty()) {
    umax = 0;
    for (const auto& f : fleet.families) umax = std::max(umax, f.max_units);
  }
  const int64_t M = umax + total + 1;
  m.meta_.big_m = M;

  auto type_of = [&](int h) { return m.units_[h].type; };
  auto add_var = [&](Variable v) {
    m.vars_.push_back(std::move(v));
    return static_cast<int>(m.vars_.size()) - 1;
  };

  // x
  m.x_.assign(static_cast<size_t>(A) * U, -1);
  for (int a = 0; a < A; ++a) {
    for (int h = 0; h < U; ++h) {
      if (!g.allows(a, type_of(h))) continue;
      Variable v;
      v.cls = VarClass::kX;
      v.arc = a;
      v.unit = h;
      v.name = "x_a" + std::to_string(a) + "_h" + std::to_string(h);
      m.x_[static_cast<size_t>(a) * U + h] = add_var(v);
    }
  }
  // theta
  m.theta_.assign(static_cast<size_t>(n) * U, -1);
  std::vector<std::vector<int>> on_trip(n);  // units that may serve each trip
  for (int j = 0; j < n; ++j) {
    int on = g.sign_on_arc(j);
    for (int h = 0; h < U; ++h) {
      if (on < 0 || !g.allows(on, type_of(h))) continue;
      on_trip[j].push_back(h);
      Variable v;
      v.cls = VarClass::kTheta;
      v.trip = j;
      v.unit = h;
      v.hi = total;
      v.name = "th_t" + std::to_string(j) + "_h" + std::to_string(h);
      m.theta_[static_cast<size_t>(j) * U + h] = add_var(v);
    }
  }
  // u
  for (int j = 0; j < n; ++j) {
    const auto& hs = on_trip[j];
    for (size_t p = 0; p < hs.size(); ++p) {
      for (size_t q = p + 1; q < hs.size(); ++q) {
        if (!m.may_couple(type_of(hs[p]), type_of(hs[q]))) continue;
        Variable v;
        v.cls = VarClass::kPair;
        v.trip = j;
        v.unit = hs[p];
        v.unit2 = hs[q];
        v.name = "u_t" + std::to_string(j) + "_h" + std::to_string(hs[p]) + "_h" + std::to_string(hs[q]);
        m.pair_[{j, hs[p], hs[q]}] = add_var(v);
      }
    }
  }
  // y
  std::vector<std::vector<int>> fam_of_trip(n);
  if (use_families) {
    for (int j = 0; j < n; ++j) {
      for (int f = 0; f < static_cast<int>(fleet.families.size()); ++f) {
        const auto& ft = fleet.families[f].types;
        bool hit = std::any_of(on_trip[j].begin(), on_trip[j].end(), [&](int h) {
          return std::find(ft.begin(), ft.end(), type_of(h)) != ft.end();
        });
        if (!hit) continue;
        fam_of_trip[j].push_back(f);
        Variable v;
        v.cls = VarClass::kFamily;
        v.trip = j;
        v.family = f;
        v.name = "y_t" + std::to_string(j) + "_f" + std::to_string(f);
        m.family_[{j, f}] = add_var(v);
      }
    }
  }
  // z
  std::vector<bool> want_z(A, opts.features.blockflow);
  for (int j = 0; j < n; ++j) {
    if (m.coupling_banned_before(j)) {
      for (int a : g.delta_minus(g.node_of_trip(j))) want_z[a] = true;
    }
    if (m.decoupling_banned_after(j)) {
      for (int a : g.delta_plus(g.node_of_trip(j))) want_z[a] = true;
    }
  }
  if (std::any_of(want_z.begin(), want_z.end(), [](bool b) { return b; })) {
    m.z_.assign(A, -1);
    for (int a = 0; a < A; ++a) {
      if (!want_z[a]) continue;
      Variable v;
      v.cls = VarClass::kBlock;
      v.arc = a;
      v.name = "z_a" + std::to_string(a);
      m.z_[a] = add_var(v);
    }
  }

  auto emit = [&](LinConstraint r) {
    normalize(r);
    m.rows_.push_back(std::move(r));
  };
  auto xs_out = [&](int node, int h) {
    std::vector<int> v;
    for (int a : g.delta_plus(node)) {
      int k = m.x(a, h);
      if (k >= 0) v.push_back(k);
    }
    return v;
  };
  auto xs_in = [&](int node, int h) {
    std::vector<int> v;
    for (int a : g.delta_minus(node)) {
      int k = m.x(a, h);
      if (k >= 0) v.push_back(k);
    }
    return v;
  };
  auto tid = [&](int j) { return tt.trip(j).id; };

  // (a) reuse, including the source node
  for (int h = 0; h < U; ++h) {
    auto v = xs_out(SchedulingGraph::kSource, h);
    if (v.empty()) continue;
    LinConstraint r{{}, Sense::kLe, 1, RowFamily::kReuse, "reuse[source,h" + std::to_string(h) + "]"};
    for (int k : v) r.terms.push_back({k, 1});
    emit(r);
  }
  for (int j = 0; j < n; ++j) {
    for (int h = 0; h < U; ++h) {
      auto v = xs_out(g.node_of_trip(j), h);
      if (v.empty()) continue;
      LinConstraint r{{}, Sense::kLe, 1, RowFamily::kReuse, "reuse[" + tid(j) + ",h" + std::to_string(h) + "]"};
      for (int k : v) r.terms.push_back({k, 1});
      emit(r);
    }
  }
  // (b) flow balance
  for (int j = 0; j < n; ++j) {
    for (int h = 0; h < U; ++h) {
      auto out = xs_out(g.node_of_trip(j), h);
      auto in = xs_in(g.node_of_trip(j), h);
      if (out.empty() && in.empty()) continue;
      LinConstraint r{{}, Sense::kEq, 0, RowFamily::kFlowBalance,
                      "flow[" + tid(j) + ",h" + std::to_string(h) + "]"};
      for (int k : out) r.terms.push_back({k, 1});
      for (int k : in) r.terms.push_back({k, -1});
      emit(r);
    }
  }
  // (c) fleet
  for (int t = 0; t < static_cast<int>(fleet.types.size()); ++t) {
    LinConstraint r{{}, Sense::kLe, fleet.types[t].fleet_size, RowFamily::kFleet, "fleet[" + fleet.types[t].id + "]"};
    for (int h = 0; h < U; ++h) {
      if (type_of(h) != t) continue;
      for (int k : xs_out(SchedulingGraph::kSource, h)) r.terms.push_back({k, 1});
    }
    if (!r.terms.empty()) emit(r);
  }
  // (d) demand
  for (int j = 0; j < n; ++j) {
    LinConstraint r{{}, Sense::kGe, tt.trip(j).demand, RowFamily::kDemand, "demand[" + tid(j) + "]"};
    for (int h = 0; h < U; ++h) {
      for (int k : xs_out(g.node_of_trip(j), h)) r.terms.push_back({k, fleet.types[type_of(h)].capacity});
    }
    emit(r);
  }
  // (e) families
  for (int j = 0; j < n && use_families; ++j) {
    if (fam_of_trip[j].empty()) continue;
    LinConstraint choice{{}, Sense::kEq, 1, RowFamily::kFamilyChoice, "family_choice[" + tid(j) + "]"};
    for (int f : fam_of_trip[j]) {
      const auto& fr = fleet.families[f];
      int y = m.family_var(j, f);
      LinConstraint units{{}, Sense::kLe, 0, RowFamily::kFamilyUnits, "family_units[" + tid(j) + "," + fr.name + "]"};
      LinConstraint cars{{}, Sense::kLe, 0, RowFamily::kFamilyCars, "family_cars[" + tid(j) + "," + fr.name + "]"};
      for (int h = 0; h < U; ++h) {
        if (std::find(fr.types.begin(), fr.types.end(), type_of(h)) == fr.types.end()) continue;
        for (int k : xs_out(g.node_of_trip(j), h)) {
          units.terms.push_back({k, 1});
          cars.terms.push_back({k, fleet.types[type_of(h)].num_cars});
        }
      }
      units.terms.push_back({y, -fr.max_units});
      cars.terms.push_back({y, -fr.max_cars});
      emit(units);
      emit(cars);
      choice.terms.push_back({y, 1});
    }
    emit(choice);
  }
  // (f) platform length
  for (int j = 0; j < n; ++j) {
    auto lim = m.platform_limit(j);
    if (!lim) continue;
    LinConstraint r{{}, Sense::kLe, *lim, RowFamily::kPlatform, "platform[" + tid(j) + "]"};
    for (int h = 0; h < U; ++h) {
      for (int k : xs_out(g.node_of_trip(j), h)) r.terms.push_back({k, fleet.types[type_of(h)].car_length});
    }
    emit(r);
  }
  // (g) block flow linking and coupling time
  int64_t vacuous_coupling_time = 0;
  for (int a = 0; a < A && !m.z_.empty(); ++a) {
    if (m.z_[a] < 0) continue;
    LinConstraint r{{}, Sense::kLe, 0, RowFamily::kBlockLink, "block[a" + std::to_string(a) + "]"};
    for (int h = 0; h < U; ++h) {
      if (m.x(a, h) >= 0) r.terms.push_back({m.x(a, h), 1});
    }
    int cap = g.arc(a).max_units > 0 ? g.arc(a).max_units : total;
    r.terms.push_back({m.z_[a], -cap});
    emit(r);
  }
  if (opts.features.blockflow) {
    for (const auto& arc : g.arcs()) {
      if (arc.kind != ArcKind::kTurnaround) continue;
      int i = g.trip_of(arc.from), j = g.trip_of(arc.to);
      if (m.decoupling_banned_after(i) || m.coupling_banned_before(j)) continue;
      const StationRules* si = fleet.station(tt.trip(i).arr_station);
      const StationRules* sj = fleet.station(tt.trip(j).dep_station);
      int64_t td = si ? si->decouple_time : 0;
      int64_t tc = sj ? sj->couple_time : 0;
      if (td == 0 && tc == 0) {
        ++vacuous_coupling_time;
        continue;
      }
      const auto& outs = g.delta_plus(arc.from);
      const auto& ins = g.delta_minus(arc.to);
      int64_t G = td * (static_cast<int64_t>(outs.size()) - 1) + tc * (static_cast<int64_t>(ins.size()) - 1);
      LinConstraint r{{}, Sense::kLe, arc.slack + td + tc + G, RowFamily::kCouplingTime,
                      "coupling_time[" + tid(i) + ">" + tid(j) + "]"};
      for (int b : outs) r.terms.push_back({m.z_[b], td});
      for (int b : ins) r.terms.push_back({m.z_[b], tc});
      r.terms.push_back({m.z_[arc.id], G});
      emit(r);
    }
  }
  // (h) bans
  for (int j = 0; j < n; ++j) {
    if (m.coupling_banned_before(j)) {
      LinConstraint r{{}, Sense::kEq, 1, RowFamily::kCouplingBan, "coupling_ban[" + tid(j) + "]"};
      for (int a : g.delta_minus(g.node_of_trip(j))) r.terms.push_back({m.z_[a], 1});
      emit(r);
    }
    if (m.decoupling_banned_after(j)) {
      LinConstraint r{{}, Sense::kEq, 1, RowFamily::kDecouplingBan, "decoupling_ban[" + tid(j) + "]"};
      for (int a : g.delta_plus(g.node_of_trip(j))) r.terms.push_back({m.z_[a], 1});
      emit(r);
    }
  }
  // (i) ordering. Rows for arc pairs (a1, a2) and unit pairs (h1, h2):
  //   s * (th[h1] - th[h2]) >= -M * (2 - x[a1,h1] - x[a2,h2])
  int64_t literal_ordering = 0;
  auto order_rows = [&](int trip, int a1, int a2, int s, RowFamily fam, const char* label) {
    for (int h1 : on_trip[trip]) {
      int x1 = m.x(a1, h1);
      if (x1 < 0) continue;
      for (int h2 : on_trip[trip]) {
        int x2 = m.x(a2, h2);
        if (h1 == h2 || x2 < 0 || !m.may_couple(type_of(h1), type_of(h2))) continue;
        LinConstraint r{{}, Sense::kGe, -2 * M, fam,
                        std::string(label) + "[" + tid(trip) + ",a" + std::to_string(a1) + ",a" +
                            std::to_string(a2) + ",h" + std::to_string(h1) + ",h" + std::to_string(h2) + "]"};
        r.terms = {{m.theta(trip, h1), s}, {m.theta(trip, h2), -s}, {x1, -M}, {x2, -M}};
        emit(r);
      }
    }
  };
  auto units_on = [&](int a) {
    int c = 0;
    for (int h = 0; h < U; ++h) c += m.x(a, h) >= 0;
    return static_cast<int64_t>(c);
  };
  for (int j = 0; j < n; ++j) {
    const int node = g.node_of_trip(j);
    const Trip& tj = tt.trip(j);
    for (int a1 : g.delta_minus(node)) {
      for (int a2 : g.delta_minus(node)) literal_ordering += 2 * units_on(a1) * units_on(a2);
    }
    for (int a1 : g.delta_plus(node)) {
      for (int a2 : g.delta_plus(node)) literal_ordering += 2 * units_on(a1) * units_on(a2);
    }
    std::vector<int> in, out;
    for (int a : g.delta_minus(node)) {
      if (g.arc(a).kind == ArcKind::kTurnaround && !g.arc(a).shunt_allowed) in.push_back(a);
    }
    for (int a : g.delta_plus(node)) {
      if (g.arc(a).kind == ArcKind::kTurnaround && !g.arc(a).shunt_allowed) out.push_back(a);
    }
    for (size_t p = 0; p < in.size(); ++p) {
      for (size_t q = p + 1; q < in.size(); ++q) {
        const Trip& i1 = tt.trip(g.trip_of(g.arc(in[p]).from));
        const Trip& i2 = tt.trip(g.trip_of(g.arc(in[q]).from));
        int c14 = tj.direction * (i1.direction - i2.direction);
        int c15 = tj.direction * (i1.direction + i2.direction) * sgn(i1.arr_time - i2.arr_time);
        if (c14 != 0) order_rows(j, in[p], in[q], c14 / 2, RowFamily::kCoupleOpposite, "couple_opposite");
        if (c15 != 0) order_rows(j, in[p], in[q], c15 / 2, RowFamily::kCoupleSame, "couple_same");
      }
    }
    for (size_t p = 0; p < out.size(); ++p) {
      for (size_t q = p + 1; q < out.size(); ++q) {
        const Trip& j1 = tt.trip(g.trip_of(g.arc(out[p]).to));
        const Trip& j2 = tt.trip(g.trip_of(g.arc(out[q]).to));
        int c16 = tj.direction * (j1.direction - j2.direction);
        int c17 = tj.direction * (j1.direction + j2.direction) * sgn(j1.dep_time - j2.dep_time);
        if (c16 != 0) order_rows(j, out[p], out[q], -c16 / 2, RowFamily::kDecoupleOpposite, "decouple_opposite");
        if (c17 != 0) order_rows(j, out[p], out[q], c17 / 2, RowFamily::kDecoupleSame, "decouple_same");
      }
    }
  }
  // order propagation across a shared turnaround arc
  for (const auto& arc : g.arcs()) {
    if (arc.kind != ArcKind::kTurnaround || arc.shunt_allowed) continue;
    int i = g.trip_of(arc.from), j = g.trip_of(arc.to);
    bool same = tt.trip(i).direction == tt.trip(j).direction;
    for (int h1 = 0; h1 < U; ++h1) {
      for (int h2 = h1 + 1; h2 < U; ++h2) {
        int x1 = m.x(arc.id, h1), x2 = m.x(arc.id, h2);
        int ui = m.pair(i, h1, h2), uj = m.pair(j, h1, h2);
        if (x1 < 0 || x2 < 0 || ui < 0 || uj < 0) continue;
        std::string tag = "[" + tid(i) + ">" + tid(j) + ",h" + std::to_string(h1) + ",h" + std::to_string(h2) + "]";
        if (same) {
          emit({{{uj, 1}, {ui, -1}, {x1, 1}, {x2, 1}}, Sense::kLe, 2, RowFamily::kPropagation, "keep_order" + tag});
          emit({{{ui, 1}, {uj, -1}, {x1, 1}, {x2, 1}}, Sense::kLe, 2, RowFamily::kPropagation, "keep_order" + tag});
        } else {
          emit({{{ui, 1}, {uj, 1}, {x1, 1}, {x2, 1}}, Sense::kLe, 3, RowFamily::kPropagation, "reverse_order" + tag});
          emit({{{ui, 1}, {uj, 1}, {x1, -1}, {x2, -1}}, Sense::kGe, -1, RowFamily::kPropagation, "reverse_order" + tag});
        }
      }
    }
  }
  // (j) order variables
  for (int j = 0; j < n; ++j) {
    const int node = g.node_of_trip(j);
    std::vector<Term> all;
    for (int h = 0; h < U; ++h) {
      for (int k : xs_out(node, h)) all.push_back({k, -1});
    }
    for (int h : on_trip[j]) {
      int th = m.theta(j, h);
      auto own = xs_out(node, h);
      std::string tag = "[" + tid(j) + ",h" + std::to_string(h) + "]";
      LinConstraint lo{{{th, -1}}, Sense::kLe, 0, RowFamily::kOrderPresence, "order_presence" + tag};
      LinConstraint act{{{th, 1}}, Sense::kLe, 0, RowFamily::kOrderActivation, "order_activation" + tag};
      for (int k : own) {
        lo.terms.push_back({k, 1});
        act.terms.push_back({k, -M});
      }
      LinConstraint cnt{all, Sense::kLe, 0, RowFamily::kOrderCount, "order_count" + tag};
      cnt.terms.push_back({th, 1});
      emit(lo);
      emit(cnt);
      emit(act);
    }
    for (size_t p = 0; p < on_trip[j].size(); ++p) {
      for (size_t q = p + 1; q < on_trip[j].size(); ++q) {
        int h1 = on_trip[j][p], h2 = on_trip[j][q];
        int u = m.pair(j, h1, h2);
        if (u < 0) continue;
        // 1 - M(1-u) - M(2-p1-p2) <= th1 - th2 <= M u - 1 + M(2-p1-p2)
        std::string tag = "[" + tid(j) + ",h" + std::to_string(h1) + ",h" + std::to_string(h2) + "]";
        LinConstraint lo{{{m.theta(j, h1), 1}, {m.theta(j, h2), -1}, {u, -M}}, Sense::kGe, 1 - 3 * M,
                         RowFamily::kOrderDistinct, "order_distinct_lo" + tag};
        LinConstraint hi{{{m.theta(j, h1), 1}, {m.theta(j, h2), -1}, {u, -M}}, Sense::kLe, 2 * M - 1,
                         RowFamily::kOrderDistinct, "order_distinct_hi" + tag};
        for (int k : xs_out(node, h1)) {
          lo.terms.push_back({k, -M});
          hi.terms.push_back({k, M});
        }
        for (int k : xs_out(node, h2)) {
          lo.terms.push_back({k, -M});
          hi.terms.push_back({k, M});
        }
        emit(lo);
        emit(hi);
      }
    }
  }

  // objective
  m.obj_.assign(m.vars_.size(), 0.0);
  for (int k = 0; k < m.num_vars(); ++k) {
    const Variable& v = m.vars_[k];
    if (v.cls == VarClass::kX) {
      const Arc& a = g.arc(v.arc);
      int t = type_of(v.unit);
      double c = m.arc_cost(t, v.arc);
      if (g.is_trip(a.from)) c += m.unit_trip_cost(t, g.trip_of(a.from));
      m.obj_[k] = c;
    } else if (v.cls == VarClass::kBlock) {
      m.obj_[k] = m.weights_.W(7);
    }
  }

  // meta
  for (const auto& v : m.vars_) ++m.meta_.vars_per_class[class_name(v.cls)];
  for (const auto& r : m.rows_) ++m.meta_.rows_per_family[row_family_name(r.family)];
  auto rows_of = [&](std::initializer_list<RowFamily> fs) {
    int64_t c = 0;
    for (auto f : fs) {
      auto it = m.meta_.rows_per_family.find(row_family_name(f));
      if (it != m.meta_.rows_per_family.end()) c += it->second;
    }
    return c;
  };
  auto vars_of = [&](const char* c) {
    auto it = m.meta_.vars_per_class.find(c);
    return it == m.meta_.vars_per_class.end() ? int64_t{0} : it->second;
  };
  const int64_t nU = static_cast<int64_t>(n) * U;
  const int64_t F = static_cast<int64_t>(fleet.families.size());
  int64_t turnarounds = 0;
  for (const auto& a : g.arcs()) turnarounds += a.kind == ArcKind::kTurnaround;

  auto& dev = m.meta_.deviations;
  dev.push_back({"ordering rows only for distinct turnaround in/out arc pairs with nonzero coefficient",
                 0,
                 rows_of({RowFamily::kCoupleOpposite, RowFamily::kCoupleSame, RowFamily::kDecoupleOpposite,
                          RowFamily::kDecoupleSame}) - literal_ordering,
                 "source/sink arcs carry no direction; rows whose direction or time factor vanishes are "
                 "0 >= 0; each arc pair is emitted in one orientation"});
  dev.push_back({"order propagation across shared turnaround arcs", 0, rows_of({RowFamily::kPropagation}),
                 "two rows per unit pair and arc; no literal counterpart"});
  dev.push_back({"theta only where the unit type may serve the trip", vars_of("theta") - nU, 0, ""});
  dev.push_back({"unordered unit pairs, family prefilter", vars_of("u") - nU * (U - 1),
                 rows_of({RowFamily::kOrderDistinct}) - 2 * nU * (U - 1),
                 "pair rows are activated only when both units are present"});
  dev.push_back({"presence lower bound emitted once", 0,
                 rows_of({RowFamily::kOrderPresence, RowFamily::kOrderCount, RowFamily::kOrderActivation}) -
                     4 * nU,
                 ""});
  dev.push_back({"reuse rows only where the unit may leave the node, plus one source row per unit", 0,
                 rows_of({RowFamily::kReuse}) - nU, "a unit signs on at most once"});
  dev.push_back({"flow balance only where the unit may visit the trip", 0,
                 rows_of({RowFamily::kFlowBalance}) - nU, ""});
  dev.push_back({"family variables only for families able to serve the trip",
                 vars_of("y") - (opts.features.families ? n * F : 0),
                 rows_of({RowFamily::kFamilyUnits, RowFamily::kFamilyCars, RowFamily::kFamilyChoice}) -
                     (opts.features.families ? n * (2 * F + 1) : 0),
                 ""});
  const int64_t bf = opts.features.blockflow ? 1 : 0;
  dev.push_back({"block variables only when block flow or bans need them", vars_of("z") - bf * A,
                 rows_of({RowFamily::kBlockLink}) - bf * A, ""});
  dev.push_back({"coupling-time rows guarded by the arc's block variable; zero-time rows omitted", 0,
                 rows_of({RowFamily::kCouplingTime}) - bf * turnarounds,
                 std::to_string(vacuous_coupling_time) + " rows with zero coupling and decoupling time"});
  int64_t vdelta = 0, rdelta = 0;
  for (const auto& d : dev) {
    vdelta += d.variables_delta;
    rdelta += d.rows_delta;
  }
  m.meta_.literal_variables = m.num_vars() - vdelta;
  m.meta_.literal_rows = m.num_rows() - rdelta;
  return m;
}

std::vector<LinConstraint> linearize_ordering(const MilpInstance& m) {
  std::vector<LinConstraint> out;
  for (const auto& r : m.constraints()) {
    if (is_ordering_family(r.family)) out.push_back(r);
  }
  return out;
}

std::vector<LinConstraint> order_variable_rows(const MilpInstance& m) {
  std::vector<LinConstraint> out;
  for (const auto& r : m.constraints()) {
    if (r.family == RowFamily::kOrderPresence || r.family == RowFamily::kOrderCount ||
        r.family == RowFamily::kOrderActivation || r.family == RowFamily::kOrderDistinct) {
      out.push_back(r);
    }
  }
  return out;
}

nlohmann::json model_stats(const MilpInstance& m) {
  nlohmann::json j;
  j["variables"] = m.num_vars();
  j["constraints"] = m.num_rows();
  j["variables_by_class"] = m.meta().vars_per_class;
  j["rows_by_family"] = m.meta().rows_per_family;
  j["big_m"] = m.meta().big_m;
  j["literal_variables"] = m.meta().literal_variables;
  j["literal_constraints"] = m.meta().literal_rows;
  auto devs = nlohmann::json::array();
  for (const auto& d : m.meta().deviations) {
    devs.push_back({{"decision", d.decision},
                    {"variables_delta", d.variables_delta},
                    {"rows_delta", d.rows_delta},
                    {"note", d.note}});
  }
  j["deviations"] = devs;
  const auto& f = m.options().features;
  j["features"] = {{"families", f.families}, {"blockflow", f.blockflow}, {"platform_length", f.platform_length}};
  return j;
}

}  // namespace tus
