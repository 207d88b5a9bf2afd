#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "support.hpp"
#include "tus/errors.hpp"

using namespace tus;
using namespace tus::testing;

namespace {

const char* kTwoUnits = R"({"unit_types": [{"id": "A", "capacity": 50, "fleet_size": 2, "car_length": 40}]})";

// Two trips meet at S and continue coupled on j.
Instance meeting(int dir_i1, int dir_i2, int arr_i1, int arr_i2) {
  std::string csv = std::string(kHeader) + "i1,X,S,0," + std::to_string(arr_i1) + ",50," + std::to_string(dir_i1) +
                    "\n" + "i2,Y,S,5," + std::to_string(arr_i2) + ",50," + std::to_string(dir_i2) + "\n" +
                    "j,S,Z,200,300,100,1\n";
  return inline_instance(csv, kTwoUnits);
}

int count_family(const MilpInstance& m, RowFamily f) {
  return static_cast<int>(std::count_if(m.constraints().begin(), m.constraints().end(),
                                        [&](const LinConstraint& r) { return r.family == f; }));
}

bool only(const MilpInstance& m, const Solution& x, RowFamily f) {
  return rows_hold(m, x, [&](RowFamily g) { return g == f; });
}

std::vector<std::map<int, int>> orders(int n, int j, std::map<int, int> th) {
  std::vector<std::map<int, int>> out(n);
  out[j] = std::move(th);
  return out;
}

}  // namespace

TEST_CASE("single trip, single unit") {
  auto in = load("single");
  const auto& m = in.model();
  int xs = 0, thetas = 0, pairs = 0;
  for (const auto& v : m.variables()) {
    xs += v.cls == VarClass::kX;
    thetas += v.cls == VarClass::kTheta;
    pairs += v.cls == VarClass::kPair;
  }
  CHECK(xs == 2);
  CHECK(thetas == 1);
  CHECK(pairs == 0);
  for (const auto& v : m.variables()) {
    if (v.cls == VarClass::kTheta) {
      CHECK(v.lo == 0);
      CHECK(v.hi == 1);
    } else {
      CHECK(v.binary());
    }
  }
}

TEST_CASE("model construction errors") {
  auto fleet = parse_fleet_config(R"({"unit_types": [{"id": "A", "capacity": 50, "fleet_size": 0}]})");
  auto tt = parse_timetable_text(std::string(kHeader) + "1,A,B,800,900,10,1\n");
  CHECK_THROWS_AS(build_model(build_dag(tt, fleet), fleet), ModelError);
  auto restricted = parse_fleet_config(
      R"({"unit_types": [{"id": "A", "capacity": 50, "fleet_size": 1}],
          "restrictions": [{"trip": "1", "types": []}]})");
  CHECK_THROWS_AS(build_model(build_dag(tt, restricted), restricted), ModelError);
}

TEST_CASE("meta bookkeeping is consistent") {
  for (const char* name : {"example1", "example2", "example3", "anglo_scottish", "deadend", "table1"}) {
    CAPTURE(name);
    auto in = load(name, ModelFeatures::all());
    const auto& m = in.model();
    const auto& meta = m.meta();
    int64_t rows = 0, vars = 0;
    for (const auto& [k, v] : meta.rows_per_family) rows += v;
    for (const auto& [k, v] : meta.vars_per_class) vars += v;
    CHECK(rows == m.num_rows());
    CHECK(vars == m.num_vars());
    CHECK(meta.big_m > m.fleet().total_fleet());
    CHECK_FALSE(meta.deviations.empty());
    std::vector<char> seen(m.num_vars(), 0);
    for (const auto& r : m.constraints()) {
      CHECK_FALSE(r.tag.empty());
      for (const auto& t : r.terms) seen[t.var] = 1;
    }
    for (int k = 0; k < m.num_vars(); ++k) {
      if (!seen[k]) CHECK(m.objective()[k] != 0);
    }
  }
}

TEST_CASE("model sizes are reported against the published ones") {
  auto ex2 = load("example2", ModelFeatures::all());
  auto stats = model_stats(ex2.model());
  CHECK(stats["variables"].get<int64_t>() == ex2.model().num_vars());
  CHECK(stats["constraints"].get<int64_t>() == ex2.model().num_rows());
  CHECK(stats.contains("deviations"));
  MESSAGE("example 2: " << ex2.model().num_vars() << " variables, " << ex2.model().num_rows() << " rows");
  auto ex1 = load("example1", ModelFeatures::all());
  MESSAGE("example 1: " << ex1.model().num_vars() << " variables, " << ex1.model().num_rows() << " rows");
}

TEST_CASE("opposite-direction coupling puts the same-direction arrival at the rear") {
  auto in = meeting(+1, -1, 100, 110);
  const auto& m = in.model();
  CHECK(count_family(m, RowFamily::kCoupleOpposite) > 0);
  std::vector<std::vector<int>> paths{{0, 2}, {1, 2}};
  auto good = encode(m, paths, orders(3, 2, {{0, 2}, {1, 1}}));
  auto bad = encode(m, paths, orders(3, 2, {{0, 1}, {1, 2}}));
  REQUIRE(good);
  REQUIRE(bad);
  CHECK(only(m, *good, RowFamily::kCoupleOpposite));
  CHECK_FALSE(only(m, *bad, RowFamily::kCoupleOpposite));
}

TEST_CASE("same-direction arrivals: opposite-coupling coefficient vanishes") {
  auto in = meeting(+1, +1, 100, 110);
  const auto& m = in.model();
  CHECK(count_family(m, RowFamily::kCoupleOpposite) == 0);
  CHECK(count_family(m, RowFamily::kCoupleSame) > 0);
  std::vector<std::vector<int>> paths{{0, 2}, {1, 2}};
  auto early_front = encode(m, paths, orders(3, 2, {{0, 1}, {1, 2}}));
  auto early_rear = encode(m, paths, orders(3, 2, {{0, 2}, {1, 1}}));
  CHECK(only(m, *early_front, RowFamily::kCoupleSame));
  CHECK_FALSE(only(m, *early_rear, RowFamily::kCoupleSame));
}

TEST_CASE("equal arrival times leave the same-direction row out") {
  auto in = meeting(+1, +1, 100, 100);
  CHECK(count_family(in.model(), RowFamily::kCoupleSame) == 0);
}

TEST_CASE("ordering rows are slack whenever a guard is off") {
  for (const char* name : {"example1", "example2", "toys/opposite", "toys/deadend"}) {
    CAPTURE(name);
    auto in = load(name);
    const auto& m = in.model();
    for (const auto& r : m.constraints()) {
      if (!is_ordering_family(r.family)) continue;
      std::vector<int> guards;
      for (size_t k = 0; k < r.terms.size(); ++k) {
        if (m.variables()[r.terms[k].var].cls == VarClass::kX) guards.push_back(static_cast<int>(k));
      }
      REQUIRE(guards.size() == 2);
      for (int off : guards) {
        // worst case of the row over the remaining variable ranges
        int64_t lo = 0, hi = 0;
        for (size_t k = 0; k < r.terms.size(); ++k) {
          if (static_cast<int>(k) == off) continue;
          const Variable& v = m.variables()[r.terms[k].var];
          int64_t a = r.terms[k].coef * v.lo, b = r.terms[k].coef * v.hi;
          lo += std::min(a, b);
          hi += std::max(a, b);
        }
        if (r.sense == Sense::kGe) CHECK(lo >= r.rhs);
        if (r.sense == Sense::kLe) CHECK(hi <= r.rhs);
      }
    }
  }
}

TEST_CASE("absent unit has theta zero") {
  auto in = meeting(+1, -1, 100, 110);
  const auto& m = in.model();
  auto x = encode(m, {{0}, {}}, orders(3, 0, {{0, 1}}));
  REQUIRE(x);
  (*x)[m.theta(1, 1) >= 0 ? m.theta(1, 1) : m.theta(2, 1)] = 1;
  CHECK_FALSE(m.violated_rows(*x).empty());
}

TEST_CASE("orders of present units form a permutation") {
  for (int q : {2, 3}) {
    CAPTURE(q);
    std::string cfg = R"({"unit_types": [{"id": "A", "capacity": 50, "fleet_size": )" + std::to_string(q) + "}]}";
    auto in = inline_instance(std::string(kHeader) + "j,S,T,0,60," + std::to_string(50 * q) + ",1\n", cfg);
    const auto& m = in.model();
    std::vector<std::vector<int>> paths(q, std::vector<int>{0});
    auto base = *encode(m, paths, orders(1, 0, {}));
    std::vector<int> th(q, 0);
    std::vector<int> pairs;
    for (int a = 0; a < q; ++a) {
      for (int b = a + 1; b < q; ++b) pairs.push_back(m.pair(0, a, b));
    }
    int feasible = 0;
    std::function<void(int)> rec = [&](int k) {
      if (k < q) {
        for (int v = 0; v <= q; ++v) {
          th[k] = v;
          rec(k + 1);
        }
        return;
      }
      bool any = false;
      for (int mask = 0; mask < (1 << pairs.size()); ++mask) {
        Solution x = base;
        for (int h = 0; h < q; ++h) x[m.theta(0, h)] = th[h];
        for (size_t p = 0; p < pairs.size(); ++p) x[pairs[p]] = mask >> p & 1;
        any = any || m.violated_rows(x).empty();
      }
      std::vector<int> sorted = th;
      std::sort(sorted.begin(), sorted.end());
      std::vector<int> want(q);
      std::iota(want.begin(), want.end(), 1);
      CHECK(any == (sorted == want));
      feasible += any;
    };
    rec(0);
    CHECK(feasible == (q == 2 ? 2 : 6));
  }
}

TEST_CASE("adding a unit adds exactly W1") {
  ObjectiveWeights w;
  w.w = {10000, 0, 0, 0, 0, 0, 0};
  auto in = load("example2");
  ModelOptions mo;
  mo.weights = w;
  auto m = build_model(in.g, in.fleet, mo);
  std::vector<std::vector<int>> base{{0, 1, 2, 6, 7, 8, 9}, {0, 3, 5, 8}, {1, 2, 4, 5}};
  std::vector<std::vector<int>> fewer{{0, 1, 2, 6, 7, 8, 9}, {0, 3, 5, 8}, {}};
  auto a = encode(m, base, std::vector<std::map<int, int>>(10));
  auto b = encode(m, fewer, std::vector<std::map<int, int>>(10));
  REQUIRE(a);
  REQUIRE(b);
  CHECK(m.evaluate(*a) - m.evaluate(*b) == doctest::Approx(10000));
}

TEST_CASE("relabeling identical units keeps feasibility and cost") {
  auto in = load("example2", ModelFeatures::all());
  const auto& m = in.model();
  auto r = solve(m);
  REQUIRE(r.incumbent);
  const Solution& x = r.incumbent->solution;
  std::vector<int> perm{0, 1, 2};
  do {
    Solution y(m.num_vars(), 0);
    for (int k = 0; k < m.num_vars(); ++k) {
      const Variable& v = m.variables()[k];
      switch (v.cls) {
        case VarClass::kX:
          y[m.x(v.arc, perm[v.unit])] = x[k];
          break;
        case VarClass::kTheta:
          y[m.theta(v.trip, perm[v.unit])] = x[k];
          break;
        case VarClass::kPair: {
          int a = perm[v.unit], b = perm[v.unit2];
          y[m.pair(v.trip, std::min(a, b), std::max(a, b))] = a < b ? x[k] : 1 - x[k];
          break;
        }
        default:
          y[k] = x[k];
      }
    }
    CHECK(m.violated_rows(y).empty());
    CHECK(m.evaluate(y) == doctest::Approx(m.evaluate(x)));
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("LP export") {
  auto in = load("example2", ModelFeatures::all());
  const auto& m = in.model();
  auto text = to_lp_string(m);
  CHECK(validate_lp_text(text).empty());
  CHECK(text == to_lp_string(build_model(in.g, in.fleet, {ModelFeatures::all(), std::nullopt})));
  CHECK(text.find("x_a0_h0") != std::string::npos);
  CHECK(text.find("th_t") != std::string::npos);
  CHECK(text.find("u_t") != std::string::npos);
  for (const auto& v : m.variables()) {
    if (v.cls == VarClass::kX) CHECK(v.name == "x_a" + std::to_string(v.arc) + "_h" + std::to_string(v.unit));
    if (v.cls == VarClass::kPair) {
      CHECK(v.name == "u_t" + std::to_string(v.trip) + "_h" + std::to_string(v.unit) + "_h" + std::to_string(v.unit2));
    }
  }
  auto dir = std::filesystem::temp_directory_path() / "tus_lp_test";
  std::filesystem::create_directories(dir);
  export_lp(m, dir / "a.lp");
  export_lp(m, dir / "b.lp");
  std::ifstream fa(dir / "a.lp"), fb(dir / "b.lp");
  std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(sa == sb);
  CHECK(sa == text);
  std::filesystem::remove_all(dir);

  auto fixed = to_lp_string(m, {{m.x(0, 0), 1}});
  CHECK(fixed.find(" x_a0_h0 = 1\n") != std::string::npos);
  CHECK(validate_lp_text(fixed).empty());
}

TEST_CASE("header-only LP text is rejected") {
  CHECK_FALSE(validate_lp_text("\\ empty\nMinimize\n obj: 0\nSubject To\nEnd\n").empty());
  CHECK_FALSE(validate_lp_text("Minimize\n obj: x\nSubject To\n c: x >= 1\nEnd\n").empty());
}

TEST_CASE("feature flags switch row families") {
  auto plain = load("example2");
  auto full = load("example2", ModelFeatures::all());
  CHECK(count_family(plain.model(), RowFamily::kFamilyChoice) == 0);
  CHECK(count_family(full.model(), RowFamily::kFamilyChoice) == 10);
  CHECK(count_family(plain.model(), RowFamily::kBlockLink) == 0);
  CHECK(count_family(full.model(), RowFamily::kBlockLink) > 0);
  CHECK(linearize_ordering(full.model()).size() ==
        static_cast<size_t>(count_family(full.model(), RowFamily::kCoupleOpposite) +
                            count_family(full.model(), RowFamily::kCoupleSame) +
                            count_family(full.model(), RowFamily::kDecoupleOpposite) +
                            count_family(full.model(), RowFamily::kDecoupleSame) +
                            count_family(full.model(), RowFamily::kPropagation)));
  CHECK(order_variable_rows(full.model()).size() ==
        static_cast<size_t>(count_family(full.model(), RowFamily::kOrderPresence) +
                            count_family(full.model(), RowFamily::kOrderCount) +
                            count_family(full.model(), RowFamily::kOrderActivation) +
                            count_family(full.model(), RowFamily::kOrderDistinct)));
}
