#pragma once

#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "tus/graph.hpp"

namespace tus::detail {

// Boolean "h1 ahead of h2 on trip" for h1 < h2, with union-find parity
// for equal/opposite links and a backtracking pass for transitivity.
class OrderSolver {
 public:
  // units_on[trip] lists the units present on each trip.
  explicit OrderSolver(std::vector<std::vector<int>> units_on);

  // a is ahead of b (smaller theta) on trip.
  void force(int trip, int a, int b);
  // relation on trip j equals the one on trip i (same) or its negation
  void link(int trip_i, int trip_j, int h1, int h2, bool same);

  bool consistent() const { return ok_; }
  // (trip, h1, h2) of the first relation left open by the fixed pairs and links.
  std::optional<std::tuple<int, int, int>> first_free();
  // Theta per trip per unit (parallel to units_on); empty when infeasible.
  std::optional<std::vector<std::vector<int>>> solve(long max_steps = 2000000);

 private:
  int var(int trip, int a, int b);
  int find(int v, int& parity);
  void unite(int a, int b, int parity);
  void fix(int v, bool value);

  std::vector<std::vector<int>> units_on_;
  std::map<std::tuple<int, int, int>, int> index_;
  std::vector<int> parent_, parity_;
  std::vector<int8_t> value_;  // per root: -1 free
  bool ok_ = true;
};

// Which unit must be ahead, from the sign of the casework coefficient;
// 0 when the rule does not apply. Positive means h2 ahead of h1.
int couple_sign(const Trip& j, const Trip& i1, const Trip& i2);
int decouple_sign(const Trip& i, const Trip& j1, const Trip& j2);

}  // namespace tus::detail
