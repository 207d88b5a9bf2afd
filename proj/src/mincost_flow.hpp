#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace tus::detail {

// Successive shortest paths with Johnson potentials; the initial
// potentials come from Bellman-Ford so negative arc costs are fine as
// long as the network is acyclic on negative arcs.
class MinCostFlow {
 public:
  explicit MinCostFlow(int n) : g_(n) {}

  int add_node() {
    g_.emplace_back();
    return static_cast<int>(g_.size()) - 1;
  }
  void add_edge(int from, int to, int64_t cap, double cost);
  // Sends up to `want` units from s to t; returns (flow, cost).
  std::pair<int64_t, double> run(int s, int t, int64_t want);

 private:
  struct Edge {
    int to;
    int64_t cap;
    double cost;
    int rev;
  };
  std::vector<std::vector<Edge>> g_;
};

}  // namespace tus::detail
