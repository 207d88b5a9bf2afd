#include <array>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include "mincost_flow.hpp"
#include "search_internal.hpp"
#include "tus/errors.hpp"
#include "tus/solver.hpp"

namespace tus {

CombinatorialBound::CombinatorialBound(const MilpInstance& m) {
  const SchedulingGraph& g = m.graph();
  const FleetConfig& fleet = m.fleet();
  const int n = g.num_trips();
  const int T = static_cast<int>(fleet.types.size());
  std::vector<int> avail(T), none(T, 0);
  for (int t = 0; t < T; ++t) avail[t] = fleet.types[t].fleet_size;
  min_units_.resize(n);
  max_units_.resize(n);
  trip_cost_.resize(n);
  for (int j = 0; j < n; ++j) {
    min_units_[j] = detail::min_units_to_cover(m, j, g.timetable().trip(j).demand, avail, none);
    max_units_[j] = detail::max_units_on(m, j);
    double c = std::numeric_limits<double>::infinity();
    for (int t = 0; t < T; ++t) {
      if (fleet.type_may_serve(t, g.timetable().trip(j))) c = std::min(c, m.unit_trip_cost(t, j));
    }
    trip_cost_[j] = c;
  }
  arc_cost_.resize(g.num_arcs());
  for (const auto& a : g.arcs()) {
    double c = std::numeric_limits<double>::infinity();
    for (int t : a.allowed_types) c = std::min(c, m.arc_cost(t, a.id));
    arc_cost_[a.id] = c;
  }
}

BoundResult CombinatorialBound::bound(const MilpInstance& m, const SearchNode&, const SearchState& s) {
  BoundResult r;
  if (s.infeasible) {
    r.infeasible = true;
    return r;
  }
  const SchedulingGraph& g = m.graph();
  const FleetConfig& fleet = m.fleet();
  const int n = g.num_trips();
  const auto& chrono = g.chronological();
  if (s.current < 0) {
    r.value = s.fixed_cost;
    return r;
  }
  const int cur = s.current;
  const int cpos = s.pos;
  const int64_t big = 1 << 20;

  detail::MinCostFlow f(4);
  const int S = 0, T = 1, SS = 2, TT = 3;
  std::vector<int64_t> bal(4, 0);
  auto node = [&]() {
    bal.push_back(0);
    return f.add_node();
  };
  std::vector<int> in(n, -1), out(n, -1), loc(n, -1);
  for (int p = cpos; p < n; ++p) {
    int k = chrono[p];
    in[k] = node();
    out[k] = node();
  }
  int fresh = 0;
  std::map<int, int> open_count;  // closed trip -> open units
  int present = 0;
  for (int h = 0; h < m.num_units(); ++h) {
    int o = s.open_at[h];
    if (o == -1) {
      ++fresh;
    } else if (o >= 0) {
      if (o == cur) {
        ++present;
      } else {
        ++open_count[o];
      }
    }
  }
  for (auto [i, c] : open_count) {
    loc[i] = node();
    bal[loc[i]] += c;
  }
  bal[S] += fresh;
  bal[out[cur]] += present;
  bal[T] -= fresh + present;
  for (auto [i, c] : open_count) bal[T] -= c;
  f.add_edge(S, T, fresh, 0);

  // candidates at the current trip, by origin
  int fresh_cand = 0;
  std::map<int, int> cand_from;
  std::vector<int> avail(fleet.types.size(), 0);
  double fresh_cost = std::numeric_limits<double>::infinity();
  for (const auto& c : s.candidates) {
    ++avail[m.units()[c.unit].type];
    if (s.open_at[c.unit] == -1) {
      ++fresh_cand;
      fresh_cost = std::min(fresh_cost, m.arc_cost(m.units()[c.unit].type, c.arc));
    } else {
      ++cand_from[s.open_at[c.unit]];
    }
  }
  double constant = 0;
  auto lower = [&](int a, int b, int64_t lo, int64_t hi, double cost) {
    if (lo > hi) return false;
    if (hi > lo) f.add_edge(a, b, hi - lo, cost);
    bal[a] -= lo;
    bal[b] += lo;
    constant += lo * cost;
    return true;
  };

  // current trip
  {
    std::vector<int> base(fleet.types.size(), 0);
    int seats = 0;
    for (int h : s.on_trip[cur]) {
      ++base[m.units()[h].type];
      seats += fleet.types[m.units()[h].type].capacity;
    }
    int need = detail::min_units_to_cover(m, cur, g.timetable().trip(cur).demand - seats, avail, base);
    if (need < 0) {
      r.infeasible = true;
      return r;
    }
    int room = std::max(0, max_units_[cur] - static_cast<int>(s.on_trip[cur].size()));
    room = std::min(room, static_cast<int>(s.candidates.size()));
    if (!lower(in[cur], out[cur], need, room, trip_cost_[cur])) {
      r.infeasible = true;
      return r;
    }
    if (fresh_cand > 0) f.add_edge(S, in[cur], fresh_cand, fresh_cost);
    for (auto [i, c] : cand_from) {
      int a = g.find_arc(g.node_of_trip(i), g.node_of_trip(cur));
      f.add_edge(i == cur ? out[cur] : loc[i], in[cur], c, arc_cost_[a]);
    }
  }
  // later trips
  for (int p = cpos + 1; p < n; ++p) {
    int k = chrono[p];
    if (min_units_[k] < 0 || !lower(in[k], out[k], min_units_[k], max_units_[k], trip_cost_[k])) {
      r.infeasible = true;
      return r;
    }
    int on = g.sign_on_arc(k);
    if (on >= 0 && fresh > 0) f.add_edge(S, in[k], big, arc_cost_[on]);
  }
  // connections out of open positions and later trips
  auto connect = [&](int trip, int from_node) {
    for (int a : g.delta_plus(g.node_of_trip(trip))) {
      const Arc& arc = g.arc(a);
      if (arc.kind == ArcKind::kSignOff) {
        f.add_edge(from_node, T, big, arc_cost_[a]);
        continue;
      }
      int k = g.trip_of(arc.to);
      if (g.chrono_position(k) <= cpos) continue;
      f.add_edge(from_node, in[k], big, arc_cost_[a]);
    }
  };
  for (auto [i, c] : open_count) connect(i, loc[i]);
  for (int p = cpos; p < n; ++p) connect(chrono[p], out[chrono[p]]);

  int64_t want = 0;
  for (int v = 0; v < static_cast<int>(bal.size()); ++v) {
    if (bal[v] > 0) {
      f.add_edge(SS, v, bal[v], 0);
      want += bal[v];
    } else if (bal[v] < 0) {
      f.add_edge(v, TT, -bal[v], 0);
    }
  }
  auto [flow, cost] = f.run(SS, TT, want);
  if (flow < want) {
    r.infeasible = true;
    return r;
  }
  r.value = s.fixed_cost + constant + cost;
  return r;
}

ExternalLpBackend::ExternalLpBackend(std::string command, std::filesystem::path workdir, BackendCapabilities caps)
    : command_(std::move(command)), workdir_(std::move(workdir)), caps_(caps) {}

BoundResult ExternalLpBackend::bound(const MilpInstance& m, const SearchNode& node, const SearchState&) {
  ++calls_;
  std::vector<std::pair<int, int64_t>> fix;
  for (int v : node.fixed_one) fix.push_back({v, 1});
  for (int v : node.fixed_zero) fix.push_back({v, 0});
  std::filesystem::create_directories(workdir_);
  auto path = workdir_ / ("node_" + std::to_string(calls_) + ".lp");
  export_lp(m, path, fix);
  std::string cmd = command_ + " '" + path.string() + "'";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) throw std::runtime_error("cannot run relaxation command: " + command_);
  std::string text;
  std::array<char, 256> buf{};
  while (fgets(buf.data(), buf.size(), pipe.get())) text += buf.data();
  std::filesystem::remove(path);
  std::istringstream lines(text);
  std::string line, last;
  while (std::getline(lines, line)) {
    if (!line.empty()) last = line;
  }
  BoundResult r;
  if (last.find("infeasible") != std::string::npos) {
    r.infeasible = true;
    return r;
  }
  try {
    r.value = std::stod(last);
  } catch (const std::exception&) {
    throw std::runtime_error("relaxation command printed no bound: '" + last + "'");
  }
  return r;
}

}  // namespace tus
