#include "mincost_flow.hpp"

#include <deque>
#include <limits>
#include <queue>

namespace tus::detail {

void MinCostFlow::add_edge(int from, int to, int64_t cap, double cost) {
  g_[from].push_back({to, cap, cost, static_cast<int>(g_[to].size())});
  g_[to].push_back({from, 0, -cost, static_cast<int>(g_[from].size()) - 1});
}

std::pair<int64_t, double> MinCostFlow::run(int s, int t, int64_t want) {
  const int n = static_cast<int>(g_.size());
  const double inf = std::numeric_limits<double>::infinity();
  const double eps = 1e-9;
  std::vector<double> pot(n, inf);
  // Bellman-Ford (queue based) for the initial potentials
  {
    std::vector<char> inq(n, 0);
    std::deque<int> q;
    pot[s] = 0;
    q.push_back(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      inq[u] = 0;
      for (const auto& e : g_[u]) {
        if (e.cap > 0 && pot[u] + e.cost < pot[e.to] - eps) {
          pot[e.to] = pot[u] + e.cost;
          if (!inq[e.to]) {
            inq[e.to] = 1;
            q.push_back(e.to);
          }
        }
      }
    }
    for (auto& p : pot) {
      if (p == inf) p = 0;
    }
  }
  int64_t flow = 0;
  double cost = 0;
  std::vector<double> dist(n);
  std::vector<int> pv(n), pe(n);
  while (flow < want) {
    std::fill(dist.begin(), dist.end(), inf);
    dist[s] = 0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0, s});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u] + eps) continue;
      for (int k = 0; k < static_cast<int>(g_[u].size()); ++k) {
        const auto& e = g_[u][k];
        if (e.cap <= 0) continue;
        double nd = d + e.cost + pot[u] - pot[e.to];
        if (nd < dist[e.to] - eps) {
          dist[e.to] = nd;
          pv[e.to] = u;
          pe[e.to] = k;
          pq.push({nd, e.to});
        }
      }
    }
    if (dist[t] == inf) break;
    for (int v = 0; v < n; ++v) {
      if (dist[v] < inf) pot[v] += dist[v];
    }
    int64_t push = want - flow;
    for (int v = t; v != s; v = pv[v]) push = std::min(push, g_[pv[v]][pe[v]].cap);
    for (int v = t; v != s; v = pv[v]) {
      auto& e = g_[pv[v]][pe[v]];
      e.cap -= push;
      g_[v][e.rev].cap += push;
      cost += push * e.cost;
    }
    flow += push;
  }
  return {flow, cost};
}

}  // namespace tus::detail
