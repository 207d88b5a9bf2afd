#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "tus/model.hpp"
#include "tus/oracle.hpp"

namespace tus {

enum class OrbitalMode { kOn, kOff, kCompare };

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 1,
  kExitInfeasible = 2,
  kExitInvariant = 3,
  kExitNoSolution = 4,  // budget ran out before any feasible schedule
};

struct RunConfig {
  std::filesystem::path timetable;
  std::filesystem::path fleet;
  std::filesystem::path out;
  ModelFeatures features = ModelFeatures::all();
  std::optional<std::filesystem::path> weights;
  OrbitalMode orbital = OrbitalMode::kOn;  // off = classical 0-1 dichotomy
  bool deterministic = true;
  int64_t budget_nodes = 0;
  double budget_seconds = 0;
  std::optional<std::filesystem::path> export_lp;
};

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  nlohmann::json stats;
};

// Reads the inputs, solves, verifies and writes schedule.csv,
// unit_diagrams.csv, gantt.svg, stats.json and timing.json under cfg.out.
RunResult run(const RunConfig& cfg);

std::string render_gantt(const UnitSchedule& schedule, const Timetable& tt, const FleetConfig& fleet);

}  // namespace tus
