#include "order_solver.hpp"

#include <algorithm>
#include <functional>

namespace tus::detail {

namespace {
int sgn(long v) { return (v > 0) - (v < 0); }
}  // namespace

int couple_sign(const Trip& j, const Trip& i1, const Trip& i2) {
  int c14 = j.direction * (i1.direction - i2.direction);
  if (c14 != 0) return c14 / 2;
  int c15 = j.direction * (i1.direction + i2.direction) * sgn(i1.arr_time - i2.arr_time);
  return c15 / 2;
}

int decouple_sign(const Trip& i, const Trip& j1, const Trip& j2) {
  int c16 = i.direction * (j1.direction - j2.direction);
  if (c16 != 0) return -c16 / 2;
  int c17 = i.direction * (j1.direction + j2.direction) * sgn(j1.dep_time - j2.dep_time);
  return c17 / 2;
}

OrderSolver::OrderSolver(std::vector<std::vector<int>> units_on) : units_on_(std::move(units_on)) {
  for (int t = 0; t < static_cast<int>(units_on_.size()); ++t) {
    auto& hs = units_on_[t];
    std::sort(hs.begin(), hs.end());
    for (size_t p = 0; p < hs.size(); ++p) {
      for (size_t q = p + 1; q < hs.size(); ++q) {
        int v = static_cast<int>(parent_.size());
        index_[{t, hs[p], hs[q]}] = v;
        parent_.push_back(v);
        parity_.push_back(0);
        value_.push_back(-1);
      }
    }
  }
}

int OrderSolver::var(int trip, int a, int b) {
  auto it = index_.find({trip, std::min(a, b), std::max(a, b)});
  return it == index_.end() ? -1 : it->second;
}

int OrderSolver::find(int v, int& parity) {
  parity = 0;
  int r = v;
  while (parent_[r] != r) {
    parity ^= parity_[r];
    r = parent_[r];
  }
  // path compression
  int p = parity;
  while (parent_[v] != r) {
    int next = parent_[v];
    int np = p ^ parity_[v];
    parent_[v] = r;
    parity_[v] = p;
    v = next;
    p = np;
  }
  return r;
}

void OrderSolver::fix(int v, bool value) {
  int p;
  int r = find(v, p);
  int8_t want = static_cast<int8_t>(value ^ p);
  if (value_[r] == -1) {
    value_[r] = want;
  } else if (value_[r] != want) {
    ok_ = false;
  }
}

void OrderSolver::unite(int a, int b, int parity) {
  int pa, pb;
  int ra = find(a, pa), rb = find(b, pb);
  if (ra == rb) {
    if ((pa ^ pb) != parity) ok_ = false;
    return;
  }
  int rel = pa ^ pb ^ parity;
  parent_[rb] = ra;
  parity_[rb] = rel;
  if (value_[rb] != -1) {
    int8_t want = static_cast<int8_t>(value_[rb] ^ rel);
    if (value_[ra] == -1) {
      value_[ra] = want;
    } else if (value_[ra] != want) {
      ok_ = false;
    }
  }
}

void OrderSolver::force(int trip, int a, int b) {
  int v = var(trip, a, b);
  if (v < 0) return;
  fix(v, a < b);
}

void OrderSolver::link(int trip_i, int trip_j, int h1, int h2, bool same) {
  int a = var(trip_i, h1, h2), b = var(trip_j, h1, h2);
  if (a < 0 || b < 0) return;
  unite(a, b, same ? 0 : 1);
}

std::optional<std::tuple<int, int, int>> OrderSolver::first_free() {
  for (const auto& [key, v] : index_) {
    int p;
    if (value_[find(v, p)] == -1) return key;
  }
  return std::nullopt;
}

std::optional<std::vector<std::vector<int>>> OrderSolver::solve(long max_steps) {
  if (!ok_) return std::nullopt;
  const int V = static_cast<int>(parent_.size());
  std::vector<int> root(V), par(V);
  for (int v = 0; v < V; ++v) root[v] = find(v, par[v]);

  // triples (ab, bc, ac) per trip; a < b < c
  struct Triple {
    int ab, bc, ac;
  };
  std::vector<Triple> triples;
  for (int t = 0; t < static_cast<int>(units_on_.size()); ++t) {
    const auto& hs = units_on_[t];
    for (size_t p = 0; p < hs.size(); ++p) {
      for (size_t q = p + 1; q < hs.size(); ++q) {
        for (size_t r = q + 1; r < hs.size(); ++r) {
          triples.push_back({var(t, hs[p], hs[q]), var(t, hs[q], hs[r]), var(t, hs[p], hs[r])});
        }
      }
    }
  }
  std::vector<int> roots;
  for (int v = 0; v < V; ++v) {
    if (root[v] == v) roots.push_back(v);
  }
  std::vector<int8_t> val(value_.begin(), value_.end());
  std::map<int, std::vector<int>> touch;  // root -> triples
  for (int k = 0; k < static_cast<int>(triples.size()); ++k) {
    for (int v : {triples[k].ab, triples[k].bc, triples[k].ac}) {
      auto& lst = touch[root[v]];
      if (lst.empty() || lst.back() != k) lst.push_back(k);
    }
  }
  auto value_of = [&](int v) -> int {
    int8_t r = val[root[v]];
    return r < 0 ? -1 : (r ^ par[v]);
  };
  auto triple_ok = [&](const Triple& t) {
    int ab = value_of(t.ab), bc = value_of(t.bc), ac = value_of(t.ac);
    if (ab < 0 || bc < 0 || ac < 0) return true;
    return !(ab == bc && ac != ab);
  };
  for (const auto& t : triples) {
    if (!triple_ok(t)) return std::nullopt;
  }
  std::vector<int> free_roots;
  for (int r : roots) {
    if (val[r] < 0) free_roots.push_back(r);
  }
  long steps = 0;
  std::function<bool(size_t)> dfs = [&](size_t k) -> bool {
    if (k == free_roots.size()) return true;
    if (++steps > max_steps) return false;
    int r = free_roots[k];
    for (int8_t choice : {int8_t{1}, int8_t{0}}) {
      val[r] = choice;
      bool good = true;
      auto it = touch.find(r);
      if (it != touch.end()) {
        for (int t : it->second) {
          if (!triple_ok(triples[t])) {
            good = false;
            break;
          }
        }
      }
      if (good && dfs(k + 1)) return true;
    }
    val[r] = -1;
    return false;
  };
  if (!dfs(0)) return std::nullopt;

  std::vector<std::vector<int>> theta(units_on_.size());
  for (int t = 0; t < static_cast<int>(units_on_.size()); ++t) {
    const auto& hs = units_on_[t];
    theta[t].assign(hs.size(), 1);
    for (size_t p = 0; p < hs.size(); ++p) {
      for (size_t q = p + 1; q < hs.size(); ++q) {
        bool p_ahead = value_of(var(t, hs[p], hs[q])) == 1;
        ++theta[t][p_ahead ? q : p];
      }
    }
  }
  return theta;
}

}  // namespace tus::detail
