#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace tus;
using namespace tus::testing;

namespace {

SchedulingGraph graph_of(const std::string& name) {
  auto dir = data_dir() / name;
  return build_dag(parse_timetable(dir / "timetable.csv"), load_fleet_config(dir / "fleet.cfg"));
}

int arc_between(const SchedulingGraph& g, const std::string& a, const std::string& b) {
  const auto& tt = g.timetable();
  return g.find_arc(g.node_of_trip(tt.index_of(a)), g.node_of_trip(tt.index_of(b)));
}

}  // namespace

TEST_CASE("fixture trip and arc counts") {
  struct Row {
    const char* name;
    int trips;
    int arcs;
  };
  for (auto r : {Row{"example1", 9, 38}, Row{"example2", 10, 54}, Row{"example3", 30, 234},
                 Row{"anglo_scottish", 32, 172}}) {
    CAPTURE(r.name);
    auto g = graph_of(r.name);
    CHECK(g.num_trips() == r.trips);
    CHECK(g.num_arcs() == r.arcs);
  }
}

TEST_CASE("table1 fixture connections") {
  auto g = graph_of("table1");
  int a = arc_between(g, "2E32", "2E11");
  REQUIRE(a >= 0);
  CHECK(g.arc(a).kind == ArcKind::kTurnaround);
  CHECK_FALSE(g.arc(a).empty_running);
  CHECK(g.arc(a).slack == 10 - 5);

  int d = arc_between(g, "2E11", "1E09");
  REQUIRE(d >= 0);
  CHECK(g.arc(d).empty_running);
  const auto& tt = g.timetable();
  const Trip& from = tt.trip(tt.index_of("2E11"));
  const Trip& to = tt.trip(tt.index_of("1E09"));
  CHECK(from.arr_station != to.dep_station);

  auto in = g.delta_minus(g.node_of_trip(tt.index_of("2E11")));
  std::set<std::string> preds;
  for (int k : in) {
    if (g.arc(k).kind == ArcKind::kTurnaround) preds.insert(g.node_label(g.arc(k).from));
  }
  CHECK(preds.count("1E06") == 1);
  CHECK(preds.count("2E32") == 1);
}

TEST_CASE("no arc against time") {
  auto g = graph_of("example2");
  const auto& tt = g.timetable();
  for (const auto& a : g.arcs()) {
    if (a.kind != ArcKind::kTurnaround) continue;
    CHECK(tt.trip(g.trip_of(a.to)).dep_time >= tt.trip(g.trip_of(a.from)).arr_time);
  }
  CHECK(arc_between(g, "4", "5") < 0);
  CHECK(arc_between(g, "5", "4") < 0);
}

TEST_CASE("turnaround arcs match a brute-force connection check") {
  for (const char* name : {"example1", "example2", "example3", "anglo_scottish", "table1", "deadend"}) {
    CAPTURE(name);
    auto dir = data_dir() / name;
    auto tt = parse_timetable(dir / "timetable.csv");
    auto fleet = load_fleet_config(dir / "fleet.cfg");
    auto g = build_dag(tt, fleet);
    for (int i = 0; i < tt.size(); ++i) {
      for (int j = 0; j < tt.size(); ++j) {
        const Trip& a = tt.trip(i);
        const Trip& b = tt.trip(j);
        Minutes need = fleet.min_turnaround(a.arr_station);
        bool ok = i != j;
        if (a.arr_station != b.dep_station) {
          auto run = fleet.empty_runs.travel_time(a.arr_station, b.dep_station);
          ok = ok && run.has_value();
          if (run) need += *run;
        }
        ok = ok && b.dep_time - a.arr_time >= need;
        bool shared = false;
        for (int t = 0; t < static_cast<int>(fleet.types.size()); ++t) {
          shared = shared || (fleet.type_may_serve(t, a) && fleet.type_may_serve(t, b));
        }
        int arc = g.find_arc(g.node_of_trip(i), g.node_of_trip(j));
        CHECK((arc >= 0) == (ok && shared));
        if (arc >= 0) {
          CHECK(g.arc(arc).slack == b.dep_time - a.arr_time - need);
          CHECK(g.arc(arc).empty_running == (a.arr_station != b.dep_station));
        }
      }
    }
  }
}

TEST_CASE("source, sink and adjacency") {
  auto g = graph_of("example1");
  CHECK(g.delta_minus(SchedulingGraph::kSource).empty());
  CHECK(g.delta_plus(g.sink()).empty());
  auto on = g.delta_plus(SchedulingGraph::kSource);
  CHECK(static_cast<int>(on.size()) == g.num_trips());
  for (int a : on) CHECK(g.arc(a).kind == ArcKind::kSignOn);
  for (int j = 0; j < g.num_trips(); ++j) {
    int node = g.node_of_trip(j);
    const auto& in = g.delta_minus(node);
    const auto& out = g.delta_plus(node);
    CHECK(std::count(in.begin(), in.end(), g.sign_on_arc(j)) == 1);
    CHECK(std::count(out.begin(), out.end(), g.sign_off_arc(j)) == 1);
    for (int a : in) CHECK(g.arc(a).to == node);
    for (int a : out) CHECK(g.arc(a).from == node);
  }
  CHECK_THROWS(g.delta_plus(g.num_nodes() + 3));
  CHECK_THROWS(g.delta_minus(-1));
}

TEST_CASE("a trip with no feasible predecessor only has its sign-on arc") {
  auto tt = parse_timetable_text(std::string(kHeader) +
                                 "early,A,B,100,200,10,1\n"
                                 "late,B,A,300,400,10,-1\n"
                                 "overlap,B,A,150,250,10,-1\n");
  auto fleet = parse_fleet_config(R"({"unit_types": [{"id": "A", "capacity": 50, "fleet_size": 2}]})");
  auto g = build_dag(tt, fleet);
  auto in = g.delta_minus(g.node_of_trip(tt.index_of("early")));
  REQUIRE(in.size() == 1);
  CHECK(in[0] == g.sign_on_arc(tt.index_of("early")));
  CHECK(g.delta_minus(g.node_of_trip(tt.index_of("overlap"))).size() == 1);
  CHECK(g.delta_minus(g.node_of_trip(tt.index_of("late"))).size() == 2);
}

TEST_CASE("topological order exists and respects every arc") {
  for (const char* name : {"example1", "example3", "anglo_scottish"}) {
    auto g = graph_of(name);
    auto order = g.topological_order();
    REQUIRE(static_cast<int>(order.size()) == g.num_nodes());
    std::vector<int> pos(g.num_nodes());
    for (int k = 0; k < g.num_nodes(); ++k) pos[order[k]] = k;
    for (const auto& a : g.arcs()) CHECK(pos[a.from] < pos[a.to]);
  }
}

TEST_CASE("arc ordering and arc views per type") {
  auto g = graph_of("example1");
  int seen = 0;
  for (const auto& a : g.arcs()) {
    int rank = a.kind == ArcKind::kSignOn ? 0 : a.kind == ArcKind::kTurnaround ? 1 : 2;
    CHECK(rank >= seen);
    seen = rank;
  }
  for (int t = 0; t < 2; ++t) {
    for (int a : g.arcs_of_type(t)) CHECK(g.allows(a, t));
  }
}

TEST_CASE("every fixture trip has flow support") {
  for (const char* name : {"example1", "example2", "example3", "anglo_scottish", "table1", "deadend"}) {
    CAPTURE(name);
    CHECK(trips_without_flow_support(graph_of(name)).empty());
  }
  auto tt = parse_timetable_text(std::string(kHeader) + "1,A,B,800,900,10,1\n");
  auto fleet = parse_fleet_config(
      R"({"unit_types": [{"id": "A", "capacity": 50, "fleet_size": 1}],
          "restrictions": [{"trip": "1", "types": []}]})");
  CHECK(trips_without_flow_support(build_dag(tt, fleet)) == std::vector<int>{0});
}

TEST_CASE("graph dump is deterministic") {
  auto a = dump_graph(graph_of("example2"));
  auto b = dump_graph(graph_of("example2"));
  CHECK(a == b);
  CHECK(a.rfind("arc_id,kind,from,to,empty,slack,types\n", 0) == 0);
  CHECK(a.find("\n0,sign_on,source,1,0,0,1\n") != std::string::npos);
  CHECK(std::count(a.begin(), a.end(), '\n') == 55);
  auto dot = to_dot(graph_of("example2"));
  CHECK(dot.rfind("digraph", 0) == 0);
}
