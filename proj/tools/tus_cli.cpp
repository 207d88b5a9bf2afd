#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "tus/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"train unit scheduling with coupling orders"};
  tus::RunConfig cfg;
  std::string timetable, fleet, out = "out", features = "all", weights, orbital = "on", lp;
  app.add_option("--timetable", timetable, "timetable CSV")->required();
  app.add_option("--fleet", fleet, "fleet config (JSON)")->required();
  app.add_option("--out", out, "output directory");
  app.add_option("--features", features, "comma list of families,blockflow,platform, or all / none");
  app.add_option("--weights", weights, "objective weights JSON, overrides the fleet config");
  app.add_option("--orbital", orbital, "on, off or compare")->check(CLI::IsMember({"on", "off", "compare"}));
  app.add_flag("--deterministic,!--no-deterministic", cfg.deterministic, "fixed node order (default on)");
  app.add_option("--budget-nodes", cfg.budget_nodes, "stop after this many nodes (0 = no limit)");
  app.add_option("--budget-seconds", cfg.budget_seconds, "stop after this many seconds (0 = no limit)");
  app.add_option("--export-lp", lp, "also write the model as an LP file");
  CLI11_PARSE(app, argc, argv);

  cfg.timetable = timetable;
  cfg.fleet = fleet;
  cfg.out = out;
  if (!weights.empty()) cfg.weights = weights;
  if (!lp.empty()) cfg.export_lp = lp;
  cfg.orbital = orbital == "off" ? tus::OrbitalMode::kOff
                : orbital == "compare" ? tus::OrbitalMode::kCompare
                                       : tus::OrbitalMode::kOn;
  if (features == "none") {
    cfg.features = {false, false, false};
  } else if (features != "all") {
    cfg.features = {false, false, false};
    std::stringstream ss(features);
    std::string f;
    while (std::getline(ss, f, ',')) {
      if (f == "families") cfg.features.families = true;
      else if (f == "blockflow") cfg.features.blockflow = true;
      else if (f == "platform") cfg.features.platform_length = true;
      else {
        std::cerr << "unknown feature: " << f << "\n";
        return tus::kExitInput;
      }
    }
  }
  tus::RunResult r = tus::run(cfg);
  (r.exit_code == 0 ? std::cout : std::cerr) << r.message << "\n";
  return r.exit_code;
}
