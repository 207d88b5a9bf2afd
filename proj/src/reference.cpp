#include <algorithm>
#include <chrono>
#include <functional>
#include <limits>
#include <numeric>

#include "tus/errors.hpp"
#include "tus/solver.hpp"

namespace tus {

SolveResult reference_solve(const MilpInstance& m, const ReferenceLimits& limits) {
  const SchedulingGraph& g = m.graph();
  const Timetable& tt = g.timetable();
  const FleetConfig& fleet = m.fleet();
  const int n = g.num_trips(), U = m.num_units();
  if (n > limits.max_trips || U > limits.max_units) {
    throw SizeGuardError("reference search is limited to " + std::to_string(limits.max_trips) + " trips and " +
                         std::to_string(limits.max_units) + " units, instance has " + std::to_string(n) + " and " +
                         std::to_string(U));
  }
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res;
  const auto& chrono = g.chronological();
  auto type_of = [&](int h) { return m.units()[h].type; };

  // stage of every row: the latest trip position whose order/family choice it reads
  std::vector<int> var_stage(m.num_vars(), -1);
  for (int k = 0; k < m.num_vars(); ++k) {
    const Variable& v = m.variables()[k];
    if (v.cls == VarClass::kTheta || v.cls == VarClass::kPair || v.cls == VarClass::kFamily) {
      var_stage[k] = g.chrono_position(v.trip);
    }
  }
  std::vector<std::vector<int>> rows_at(n + 1);
  for (int r = 0; r < m.num_rows(); ++r) {
    int st = -1;
    for (const auto& t : m.constraints()[r].terms) st = std::max(st, var_stage[t.var]);
    rows_at[st + 1].push_back(r);
  }

  bool nonneg = std::all_of(m.objective().begin(), m.objective().end(), [](double c) { return c >= 0; });
  double min_on = std::numeric_limits<double>::infinity();
  for (const auto& a : g.arcs()) {
    if (a.kind != ArcKind::kSignOn) continue;
    for (int t : a.allowed_types) min_on = std::min(min_on, m.arc_cost(t, a.id));
  }
  std::vector<int> need(n, 0);
  std::vector<double> trip_min(n, 0);
  for (int j = 0; j < n; ++j) {
    // fewest units able to carry the demand, ignoring family limits
    std::vector<int> caps;
    for (int h = 0; h < U; ++h) {
      if (fleet.type_may_serve(type_of(h), tt.trip(j))) caps.push_back(fleet.types[type_of(h)].capacity);
    }
    std::sort(caps.rbegin(), caps.rend());
    int seats = 0;
    while (seats < tt.trip(j).demand && need[j] < static_cast<int>(caps.size())) seats += caps[need[j]++];
    double c = std::numeric_limits<double>::infinity();
    for (int t = 0; t < static_cast<int>(fleet.types.size()); ++t) {
      if (fleet.type_may_serve(t, tt.trip(j))) c = std::min(c, m.unit_trip_cost(t, j));
    }
    trip_min[j] = std::isfinite(c) ? c : 0;
  }

  std::vector<int> last(U, -1);
  std::vector<std::vector<int>> path(U), entry(U);
  std::vector<std::vector<int>> on(n);
  double best = std::numeric_limits<double>::infinity();
  Solution best_x;

  auto lower_bound = [&](int p) {
    if (!nonneg) return -std::numeric_limits<double>::infinity();
    int active = 0;
    for (int h = 0; h < U; ++h) active += last[h] >= 0;
    int deficit = 0;
    double lb = 0;
    for (int q = p; q < n; ++q) {
      deficit = std::max(deficit, need[chrono[q]] - active);
      lb += need[chrono[q]] * trip_min[chrono[q]];
    }
    return lb + deficit * min_on;
  };

  auto complete = [&](Solution& x) -> bool {
    std::vector<char> used(g.num_arcs(), 0);
    for (int h = 0; h < U; ++h) {
      if (path[h].empty()) continue;
      for (int a : entry[h]) {
        x[m.x(a, h)] = 1;
        used[a] = 1;
      }
      int off = g.sign_off_arc(path[h].back());
      if (off < 0 || m.x(off, h) < 0) return false;
      x[m.x(off, h)] = 1;
      used[off] = 1;
    }
    for (int a = 0; a < g.num_arcs(); ++a) {
      if (m.block(a) >= 0) x[m.block(a)] = used[a];
    }
    auto fill = [&](const std::vector<int>& arcs) {
      for (int a : arcs) {
        if (m.block(a) >= 0 && x[m.block(a)]) return;
      }
      for (int a : arcs) {
        if (m.block(a) >= 0) {
          x[m.block(a)] = 1;
          return;
        }
      }
    };
    for (int j = 0; j < n; ++j) {
      if (m.coupling_banned_before(j)) fill(g.delta_minus(g.node_of_trip(j)));
      if (m.decoupling_banned_after(j)) fill(g.delta_plus(g.node_of_trip(j)));
    }
    for (int r : rows_at[0]) {
      if (!m.row_satisfied(r, x)) return false;
    }
    // orders and family choice, trip by trip
    std::function<bool(int)> stage = [&](int p) -> bool {
      if (p == n) return true;
      int j = chrono[p];
      std::vector<int> hs = on[j];
      std::sort(hs.begin(), hs.end());
      std::vector<int> fams;
      for (int f = 0; f < static_cast<int>(fleet.families.size()); ++f) {
        if (m.family_var(j, f) >= 0) fams.push_back(m.family_var(j, f));
      }
      if (fams.empty()) fams.push_back(-1);
      std::vector<int> perm(hs.size());
      std::iota(perm.begin(), perm.end(), 1);
      do {
        for (size_t k = 0; k < hs.size(); ++k) x[m.theta(j, hs[k])] = perm[k];
        for (size_t a = 0; a < hs.size(); ++a) {
          for (size_t b = a + 1; b < hs.size(); ++b) {
            int v = m.pair(j, hs[a], hs[b]);
            if (v >= 0) x[v] = perm[a] > perm[b];
          }
        }
        for (int y : fams) {
          for (int z : fams) {
            if (z >= 0) x[z] = 0;
          }
          if (y >= 0) x[y] = 1;
          bool ok = true;
          for (int r : rows_at[p + 1]) {
            if (!m.row_satisfied(r, x)) {
              ok = false;
              break;
            }
          }
          if (ok && stage(p + 1)) return true;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
      return false;
    };
    return stage(0);
  };

  std::function<void(int, double)> dfs = [&](int p, double cost) {
    ++res.stats.nodes;
    if (cost + lower_bound(p) >= best - 1e-9) {
      ++res.stats.pruned_bound;
      return;
    }
    if (p == n) {
      ++res.stats.leaves;
      Solution x(m.num_vars(), 0);
      if (!complete(x)) return;
      double obj = m.evaluate(x);
      if (obj < best - 1e-9) {
        best = obj;
        best_x = x;
        ++res.stats.incumbents;
      }
      return;
    }
    const int j = chrono[p];
    const int node = g.node_of_trip(j);
    std::vector<std::pair<int, int>> active;  // (unit, arc)
    std::vector<std::vector<std::pair<int, int>>> fresh(fleet.types.size());
    for (int h = 0; h < U; ++h) {
      int a = last[h] < 0 ? g.sign_on_arc(j) : g.find_arc(g.node_of_trip(last[h]), node);
      if (a < 0 || m.x(a, h) < 0) continue;
      (last[h] < 0 ? fresh[type_of(h)] : active).push_back({h, a});
    }
    // fresh units of one type are interchangeable: take the lowest uids
    std::vector<int> count(fleet.types.size(), 0);
    std::function<void(size_t, uint32_t)> pick_fresh = [&](size_t t, uint32_t mask) {
      if (t == fleet.types.size()) {
        std::vector<std::pair<int, int>> chosen;
        for (size_t k = 0; k < active.size(); ++k) {
          if (mask >> k & 1) chosen.push_back(active[k]);
        }
        for (size_t tt2 = 0; tt2 < fresh.size(); ++tt2) {
          for (int c = 0; c < count[tt2]; ++c) chosen.push_back(fresh[tt2][c]);
        }
        int seats = 0;
        for (auto [h, a] : chosen) seats += fleet.types[type_of(h)].capacity;
        if (seats < tt.trip(j).demand) return;
        double add = 0;
        std::vector<int> saved;
        for (auto [h, a] : chosen) {
          saved.push_back(last[h]);
          path[h].push_back(j);
          entry[h].push_back(a);
          last[h] = j;
          on[j].push_back(h);
          add += m.arc_cost(type_of(h), a) + m.unit_trip_cost(type_of(h), j);
        }
        dfs(p + 1, cost + add);
        for (size_t k = 0; k < chosen.size(); ++k) {
          int h = chosen[k].first;
          path[h].pop_back();
          entry[h].pop_back();
          last[h] = saved[k];
        }
        on[j].clear();
        return;
      }
      for (int c = 0; c <= static_cast<int>(fresh[t].size()); ++c) {
        count[t] = c;
        pick_fresh(t + 1, mask);
      }
      count[t] = 0;
    };
    for (uint32_t mask = 0; mask < (1u << active.size()); ++mask) pick_fresh(0, mask);
  };
  dfs(0, 0.0);

  res.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (best_x.empty()) {
    res.status = SolveStatus::kInfeasible;
    res.certificate = "exhaustive search found no feasible schedule";
  } else {
    res.status = SolveStatus::kOptimal;
    res.incumbent = Incumbent{best_x, best, ProofState::kOptimal};
    res.certificate = "exhaustive search";
  }
  return res;
}

}  // namespace tus
