#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "support.hpp"
#include "tus/errors.hpp"

using namespace tus;
using namespace tus::testing;

namespace {

// Two units arrive coupled; the front one leaves later the way it came,
// the rear one leaves earlier continuing forward.
const char* kBlock =
    "a,W,S,540,600,100,1\n"
    "f,S,E,620,660,50,1\n"
    "r,S,W,630,690,50,-1\n";
const char* kBlockFleet = R"({"unit_types": [{"id": "A", "capacity": 50, "fleet_size": 2}]})";

UnitSchedule blocked(int theta_of_reverse_unit) {
  UnitSchedule s;
  s.unit_type = {0, 0};
  s.paths = {{0, 2}, {0, 1}};
  s.placements = {{{0, theta_of_reverse_unit}, {1, 3 - theta_of_reverse_unit}}, {{1, 1}}, {{0, 1}}};
  return s;
}

// Published unit paths of example 2 (trip indices), orders on the coupled trips.
UnitSchedule example2(const std::map<int, std::map<int, int>>& theta) {
  UnitSchedule s;
  s.unit_type = {0, 0, 0};
  s.paths = {{0, 1, 2, 6, 7, 8, 9}, {0, 3, 5, 8}, {1, 2, 4, 5}};
  s.placements.assign(10, {});
  for (int h = 0; h < 3; ++h) {
    for (int j : s.paths[h]) {
      int t = theta.count(j) ? theta.at(j).at(h) : 1;
      s.placements[j].push_back({h, t});
    }
  }
  return s;
}

Timetable flip(const Timetable& tt) {
  std::vector<Trip> trips = tt.trips();
  for (auto& t : trips) t.direction = -t.direction;
  return Timetable(trips);
}

std::vector<std::string> rules(const std::vector<Violation>& v) {
  std::vector<std::string> r;
  for (const auto& e : v) r.push_back(e.rule + "@" + std::to_string(e.trip));
  std::sort(r.begin(), r.end());
  return r;
}

}  // namespace

TEST_CASE("two units arrive coupled, the rear one leaves first: blocked") {
  auto tt = parse_timetable_text(std::string(kHeader) + kBlock);
  auto fleet = parse_fleet_config(kBlockFleet);
  auto v = verify(blocked(1), tt, fleet);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::kBlockage);
  CHECK((v[0].rule == "T3.row10" || v[0].rule == "T3.row11"));
  CHECK(v[0].trip == 0);
  CHECK(v[0].station == "S");
  CHECK(verify(blocked(2), tt, fleet).empty());
}

TEST_CASE("example 2 published orders") {
  auto in = load("example2", ModelFeatures::all());
  OracleOptions all{ModelFeatures::all()};
  // unit 0 before unit 1 on trip 1; unit 2 in front of unit 0 on trips 2 and 3
  std::map<int, std::map<int, int>> th{{0, {{0, 1}, {1, 2}}}, {1, {{2, 1}, {0, 2}}}, {2, {{2, 1}, {0, 2}}}};
  int accepted = 0;
  for (int t6 : {1, 2}) {
    for (int t9 : {1, 2}) {
      auto o = th;
      o[5] = {{1, t6}, {2, 3 - t6}};
      o[8] = {{0, t9}, {1, 3 - t9}};
      auto v = verify(example2(o), in.tt, in.fleet, all);
      if (v.empty()) {
        ++accepted;
        auto swapped = o;
        swapped[0] = {{0, 2}, {1, 1}};
        auto w = verify(example2(swapped), in.tt, in.fleet, all);
        REQUIRE(w.size() == 1);
        CHECK(w[0].kind == ViolationKind::kDecouplingOrder);
        CHECK((w[0].rule == "T3.row12" || w[0].rule == "T3.row13"));
        CHECK(w[0].trip == 0);
        auto rear2 = o;
        rear2[1] = {{2, 2}, {0, 1}};
        rear2[2] = {{2, 2}, {0, 1}};
        CHECK(has_rule_prefix(verify(example2(rear2), in.tt, in.fleet, all), "T3.row12"));
      }
    }
  }
  CHECK(accepted >= 1);
}

TEST_CASE("staying coupled keeps or reverses the order") {
  auto in = load("example2");
  std::map<int, std::map<int, int>> th{{0, {{0, 1}, {1, 2}}}, {1, {{2, 1}, {0, 2}}}, {2, {{2, 2}, {0, 1}}},
                                       {5, {{1, 1}, {2, 2}}},  {8, {{0, 1}, {1, 2}}}};
  auto v = verify(example2(th), in.tt, in.fleet);
  CHECK(has_rule_prefix(v, "T3.row7"));
  for (const auto& e : v) {
    if (e.rule == "T3.row7") CHECK(e.kind == ViolationKind::kPropagation);
  }
}

TEST_CASE("global direction flip leaves the verdicts unchanged") {
  for (const char* name : {"toys/opposite", "toys/same", "toys/reverse", "toys/deadend"}) {
    CAPTURE(name);
    auto in = load(name);
    auto flipped = flip(in.tt);
    int64_t seen = 0, ok = 0;
    for_each_schedule(in.model(), [&](const auto& paths, const auto& theta) {
      auto s = schedule_of(in.model(), paths, theta);
      auto a = verify(s, in.tt, in.fleet);
      auto b = verify(s, flipped, in.fleet);
      CHECK(rules(a) == rules(b));
      ++seen;
      ok += a.empty();
    });
    CHECK(seen > 0);
    CHECK(ok > 0);
  }
}

TEST_CASE("shunting only removes ordering findings") {
  for (const char* name : {"toys/opposite", "toys/same", "toys/reverse"}) {
    CAPTURE(name);
    auto in = load(name);
    FleetConfig shunting = in.fleet;
    for (const auto& a : in.g.arcs()) {
      if (a.kind == ArcKind::kTurnaround) {
        shunting.shunt_allowed.insert({in.tt.trip(in.g.trip_of(a.from)).id, in.tt.trip(in.g.trip_of(a.to)).id});
      }
    }
    int64_t relieved = 0;
    for_each_schedule(in.model(), [&](const auto& paths, const auto& theta) {
      auto s = schedule_of(in.model(), paths, theta);
      auto strict = verify(s, in.tt, in.fleet);
      auto relaxed = verify(s, in.tt, shunting);
      std::vector<std::string> a, b;
      for (const auto& e : strict) {
        if (e.rule.rfind("structural.", 0) == 0) a.push_back(e.rule + "@" + std::to_string(e.trip));
      }
      for (const auto& e : relaxed) {
        CHECK(e.rule.rfind("structural.", 0) == 0);
        b.push_back(e.rule + "@" + std::to_string(e.trip));
      }
      CHECK(a == b);
      relieved += strict.size() != relaxed.size();
    });
    CHECK(relieved > 0);
  }
}

TEST_CASE("structural findings") {
  auto in = load("example2");
  SUBCASE("empty schedule leaves every trip uncovered") {
    UnitSchedule s;
    s.unit_type = {0, 0, 0};
    s.paths.assign(3, {});
    s.placements.assign(10, {});
    auto v = verify(s, in.tt, in.fleet);
    CHECK(v.size() == 10);
    for (const auto& e : v) CHECK(e.kind == ViolationKind::kCoverage);
  }
  SUBCASE("too many units of a type") {
    auto s = example2({{0, {{0, 1}, {1, 2}}}, {1, {{2, 1}, {0, 2}}}, {2, {{2, 1}, {0, 2}}}, {5, {{1, 1}, {2, 2}}},
                       {8, {{0, 1}, {1, 2}}}});
    s.unit_type.push_back(0);
    s.paths.push_back({3});
    s.placements[3].push_back({3, 2});
    auto v = verify(s, in.tt, in.fleet);
    CHECK(std::any_of(v.begin(), v.end(), [](const Violation& e) { return e.kind == ViolationKind::kFleet; }));
  }
  SUBCASE("connection too tight") {
    UnitSchedule s;
    s.unit_type = {0, 0, 0};
    s.paths = {{0, 1, 2, 3}, {}, {}};
    s.placements.assign(10, {});
    for (int j : s.paths[0]) s.placements[j].push_back({0, 1});
    auto v = verify(s, in.tt, in.fleet);
    CHECK(has_rule_prefix(v, "structural.turnaround"));
  }
  SUBCASE("malformed schedules are refused") {
    UnitSchedule s;
    s.unit_type = {0};
    s.paths = {{42}};
    s.placements.assign(10, {});
    CHECK_THROWS_AS(verify(s, in.tt, in.fleet), StructuralError);
    s.paths = {{0}};
    s.placements[0] = {{0, 2}};
    CHECK_THROWS_AS(verify(s, in.tt, in.fleet), StructuralError);
    s.placements[0] = {};
    CHECK_THROWS_AS(verify(s, in.tt, in.fleet), StructuralError);
  }
}

TEST_CASE("decode") {
  auto in = load("table1");
  const auto& m = in.model();
  int a = trip(in, "1E06"), b = trip(in, "2E32"), c = trip(in, "2E11"), d = trip(in, "2E03"), e = trip(in, "1E09");
  std::vector<std::map<int, int>> th(5);
  th[a] = {{0, 1}};
  th[b] = {{1, 1}};
  th[c] = {{0, 2}, {1, 1}};
  th[d] = {{0, 1}};
  th[e] = {{1, 1}};
  auto x = encode(m, {{a, c, d}, {b, c, e}}, th);
  REQUIRE(x);
  auto s = decode(*x, m);
  CHECK(s.paths[0] == std::vector<int>{a, c, d});
  CHECK(s.paths[1] == std::vector<int>{b, c, e});
  CHECK(s.placements[c].size() == 2);
  CHECK(theta_of(s, c, 0) == 2);

  std::vector<double> frac(x->begin(), x->end());
  frac[m.x(in.g.sign_on_arc(a), 0)] = 0.5;
  CHECK_THROWS_AS(decode(frac, m), DecodeError);
  CHECK_THROWS_AS(decode(Solution(m.num_vars(), 0), m), DecodeError);
  CHECK_THROWS_AS(decode(Solution(3, 0), m), DecodeError);

  auto twice = *x;
  twice[m.x(in.g.sign_off_arc(c), 0)] = 1;
  CHECK_THROWS_AS(decode(twice, m), DecodeError);
  auto broken = *x;
  broken[m.x(in.g.sign_on_arc(a), 0)] = 0;
  CHECK_THROWS_AS(decode(broken, m), DecodeError);
}

TEST_CASE("decode example 1: unit 10 runs trip 3 after trip 1") {
  auto in = load("example1");
  const auto& m = in.model();
  std::vector<std::vector<int>> paths(15);
  std::vector<std::map<int, int>> th(9);
  paths[10] = {0, 2};
  for (int j = 0; j < 9; ++j) {
    if (j != 0 && j != 2) paths[j].push_back(j);
  }
  for (int h = 0; h < 15; ++h) {
    for (int j : paths[h]) th[j][h] = 1;
  }
  auto x = encode(m, paths, th);
  REQUIRE(x);
  auto s = decode(*x, m);
  CHECK(s.paths[10] == std::vector<int>{0, 2});
  CHECK(s.unit_type[10] == 1);
}

TEST_CASE("violation report is JSON lines") {
  auto tt = parse_timetable_text(std::string(kHeader) + kBlock);
  auto v = verify(blocked(1), tt, parse_fleet_config(kBlockFleet));
  auto text = violations_to_jsonl(v, tt);
  REQUIRE(std::count(text.begin(), text.end(), '\n') == 1);
  auto j = nlohmann::json::parse(text);
  CHECK(j["kind"] == "blockage");
  CHECK(j["trip"] == "a");
  CHECK(j["units"].size() == 2);
  for (const char* k : {"rule", "kind", "trip", "station", "units", "explanation"}) CHECK(j.contains(k));
}
