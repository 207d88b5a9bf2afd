#include "tus/runner.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "tus/errors.hpp"
#include "tus/graph.hpp"
#include "tus/solver.hpp"

namespace tus {

namespace {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ParseError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string schedule_csv(const UnitSchedule& s, const Timetable& tt, const FleetConfig& fleet) {
  std::string out = "trip,unit,type,theta\n";
  for (int j = 0; j < tt.size(); ++j) {
    auto pl = s.placements[j];
    std::sort(pl.begin(), pl.end(), [](const Placement& a, const Placement& b) { return a.theta < b.theta; });
    for (const auto& p : pl) {
      out += tt.trip(j).id + "," + std::to_string(p.unit) + "," + fleet.types[s.unit_type[p.unit]].id + "," +
             std::to_string(p.theta) + "\n";
    }
  }
  return out;
}

std::string diagrams_csv(const UnitSchedule& s, const Timetable& tt, const FleetConfig& fleet) {
  std::string out = "unit,type,trips\n";
  for (int h = 0; h < s.num_units(); ++h) {
    if (s.paths[h].empty()) continue;
    std::string trips;
    for (int j : s.paths[h]) trips += (trips.empty() ? "" : " ") + tt.trip(j).id;
    out += std::to_string(h) + "," + fleet.types[s.unit_type[h]].id + "," + trips + "\n";
  }
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

json solve_json(const SolveResult& r) {
  json j;
  j["status"] = to_string(r.status);
  j["objective"] = r.incumbent ? json(r.incumbent->objective) : json(nullptr);
  j["proof"] = r.incumbent ? to_string(r.incumbent->proof) : "none";
  j["nodes"] = r.stats.nodes;
  j["leaves"] = r.stats.leaves;
  j["pruned_bound"] = r.stats.pruned_bound;
  j["pruned_infeasible"] = r.stats.pruned_infeasible;
  j["incumbents"] = r.stats.incumbents;
  j["max_depth"] = r.stats.max_depth;
  j["root_bound"] = r.stats.root_bound;
  j["budget_exhausted"] = r.stats.budget_exhausted;
  j["certificate"] = r.certificate;
  return j;
}

void write_empty(const std::filesystem::path& out) {
  write_file(out / "schedule.csv", "trip,unit,type,theta\n");
  write_file(out / "unit_diagrams.csv", "unit,type,trips\n");
  write_file(out / "gantt.svg", render_gantt(UnitSchedule{}, Timetable{}, FleetConfig{}));
}

}  // namespace

std::string render_gantt(const UnitSchedule& s, const Timetable& tt, const FleetConfig& fleet) {
  const int lane_h = 24, left = 80, top = 20;
  const double scale = 0.5;  // px per minute
  std::vector<int> lanes;
  for (int h = 0; h < s.num_units(); ++h) {
    if (!s.paths[h].empty()) lanes.push_back(h);
  }
  int t0 = 0, t1 = 0;
  bool any = false;
  for (int h : lanes) {
    for (int j : s.paths[h]) {
      const Trip& t = tt.trip(j);
      t0 = any ? std::min(t0, t.dep_time) : t.dep_time;
      t1 = any ? std::max(t1, t.arr_time) : t.arr_time;
      any = true;
    }
  }
  const int width = left + static_cast<int>((t1 - t0) * scale) + 20;
  const int height = top + lane_h * static_cast<int>(lanes.size()) + 20;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" data-start=\"" << t0 << "\">\n";
  for (size_t k = 0; k < lanes.size(); ++k) {
    int h = lanes[k];
    int y = top + lane_h * static_cast<int>(k);
    o << "<g class=\"lane\" data-unit=\"" << h << "\">\n";
    o << "<text x=\"4\" y=\"" << y + 16 << "\" font-size=\"11\">unit " << h << " ("
      << xml_escape(fleet.types.at(s.unit_type[h]).id) << ")</text>\n";
    for (int j : s.paths[h]) {
      const Trip& t = tt.trip(j);
      int theta = 0;
      for (const auto& p : s.placements[j]) {
        if (p.unit == h) theta = p.theta;
      }
      double x = left + (t.dep_time - t0) * scale;
      double w = std::max(1.0, t.duration() * scale);
      o << "<rect x=\"" << x << "\" y=\"" << y + 2 << "\" width=\"" << w << "\" height=\"" << lane_h - 4
        << "\" fill=\"#9cc\" stroke=\"#366\" data-trip=\"" << xml_escape(t.id) << "\" data-unit=\"" << h
        << "\" data-theta=\"" << theta << "\"/>\n";
      o << "<text x=\"" << x + 2 << "\" y=\"" << y + 16 << "\" font-size=\"10\">" << xml_escape(t.id) << " θ" << theta
        << "</text>\n";
    }
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

RunResult run(const RunConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  RunResult res;
  std::filesystem::create_directories(cfg.out);
  auto fail = [&](int code, std::string msg) {
    res.exit_code = code;
    res.message = std::move(msg);
    if (!res.stats.is_null()) write_file(cfg.out / "stats.json", res.stats.dump(2) + "\n");
    return res;
  };

  Timetable tt;
  FleetConfig fleet;
  try {
    tt = parse_timetable(cfg.timetable);
    fleet = load_fleet_config(cfg.fleet);
    if (cfg.weights) fleet.weights = parse_weights(read_file(*cfg.weights));
  } catch (const std::exception& e) {
    return fail(kExitInput, e.what());
  }
  res.stats["instance"] = {{"trips", tt.size()}, {"units", fleet.total_fleet()}};
  res.stats["violations"] = 0;
  if (tt.empty()) {
    write_empty(cfg.out);
    res.stats["instance"]["arcs"] = 0;
    res.stats["solve"] = {{"status", "optimal"}, {"objective", 0}, {"nodes", 0}};
    res.stats["schedule"] = {{"units_used", 0}, {"coupled_trains", 0}};
    write_file(cfg.out / "stats.json", res.stats.dump(2) + "\n");
    write_file(cfg.out / "timing.json", json{{"seconds_total", 0.0}}.dump(2) + "\n");
    res.message = "empty timetable";
    return res;
  }
  ValidationReport report = validate_instance(tt, fleet);
  if (!report.admissible()) {
    std::string msg;
    bool infeasible = false;
    for (const auto& f : report.findings) {
      msg += f.code + ": " + f.message + "\n";
      infeasible = infeasible || f.code == "uncoverable demand" || f.code == "unservable trip";
    }
    res.stats["solve"] = {{"status", infeasible ? "infeasible" : "invalid"}, {"certificate", msg}};
    return fail(infeasible ? kExitInfeasible : kExitInput, msg);
  }

  SchedulingGraph g;
  std::optional<MilpInstance> m;
  try {
    g = build_dag(tt, fleet);
    res.stats["instance"]["arcs"] = g.num_arcs();
    if (auto bad = trips_without_flow_support(g); !bad.empty()) {
      std::string msg = "no unit can reach trip";
      for (int j : bad) msg += " " + tt.trip(j).id;
      res.stats["solve"] = {{"status", "infeasible"}, {"certificate", msg}};
      return fail(kExitInfeasible, msg);
    }
    m = build_model(g, fleet, {cfg.features, std::nullopt});
    if (cfg.export_lp) export_lp(*m, *cfg.export_lp);
  } catch (const std::exception& e) {
    return fail(kExitInput, e.what());
  }
  res.stats["model"] = model_stats(*m);

  SolverOptions so;
  so.deterministic = cfg.deterministic;
  so.node_budget = cfg.budget_nodes;
  so.time_budget_s = cfg.budget_seconds;
  json timing;
  SolveResult result;
  try {
    if (cfg.orbital == OrbitalMode::kCompare) {
      so.orbital = false;
      SolveResult classical = solve(*m, nullptr, so);
      so.orbital = true;
      result = solve(*m, nullptr, so);
      res.stats["comparison"] = {{"nodes_orbital", result.stats.nodes},
                                 {"nodes_classical", classical.stats.nodes},
                                 {"leaves_orbital", result.stats.leaves},
                                 {"leaves_classical", classical.stats.leaves},
                                 {"status_orbital", to_string(result.status)},
                                 {"status_classical", to_string(classical.status)}};
      timing["seconds_orbital"] = result.stats.seconds;
      timing["seconds_classical"] = classical.stats.seconds;
    } else {
      so.orbital = cfg.orbital == OrbitalMode::kOn;
      result = solve(*m, nullptr, so);
    }
  } catch (const InvariantError& e) {
    return fail(kExitInvariant, std::string("invariant breach: ") + e.what());
  }
  res.stats["solve"] = solve_json(result);
  res.stats["solve"]["orbital"] = cfg.orbital != OrbitalMode::kOff;
  timing["seconds_solve"] = result.stats.seconds;

  auto finish_timing = [&] {
    timing["seconds_total"] = std::chrono::duration<double>(clock::now() - t0).count();
    write_file(cfg.out / "timing.json", timing.dump(2) + "\n");
  };
  if (!result.incumbent) {
    finish_timing();
    if (result.status == SolveStatus::kInfeasible) return fail(kExitInfeasible, result.certificate);
    return fail(kExitNoSolution, result.certificate);
  }

  UnitSchedule sched;
  std::vector<Violation> violations;
  try {
    sched = decode(result.incumbent->solution, *m);
    violations = verify(sched, tt, fleet, OracleOptions{cfg.features});
  } catch (const std::exception& e) {
    finish_timing();
    return fail(kExitInvariant, std::string("invariant breach: ") + e.what());
  }
  res.stats["violations"] = violations.size();
  if (!violations.empty()) {
    write_file(cfg.out / "violations.jsonl", violations_to_jsonl(violations, tt));
    finish_timing();
    return fail(kExitInvariant, "invariant breach: oracle rejected the solver's schedule");
  }
  int used = 0, coupled = 0;
  for (const auto& p : sched.paths) used += !p.empty();
  for (const auto& pl : sched.placements) coupled += pl.size() >= 2;
  res.stats["schedule"] = {{"units_used", used}, {"coupled_trains", coupled}};

  write_file(cfg.out / "schedule.csv", schedule_csv(sched, tt, fleet));
  write_file(cfg.out / "unit_diagrams.csv", diagrams_csv(sched, tt, fleet));
  write_file(cfg.out / "gantt.svg", render_gantt(sched, tt, fleet));
  write_file(cfg.out / "stats.json", res.stats.dump(2) + "\n");
  finish_timing();
  res.message = std::string(to_string(result.status)) + ", objective " + std::to_string(result.incumbent->objective);
  return res;
}

}  // namespace tus
