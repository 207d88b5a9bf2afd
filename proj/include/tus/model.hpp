#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tus/graph.hpp"
#include "tus/timetable.hpp"

namespace tus {

enum class VarClass { kX, kTheta, kPair, kFamily, kBlock };

struct Variable {
  VarClass cls = VarClass::kX;
  int arc = -1;
  int trip = -1;
  int unit = -1;
  int unit2 = -1;
  int family = -1;
  int64_t lo = 0;
  int64_t hi = 1;
  std::string name;

  bool binary() const { return lo == 0 && hi == 1 && cls != VarClass::kTheta; }
};

enum class Sense { kLe, kEq, kGe };

enum class RowFamily {
  kReuse,
  kFlowBalance,
  kFleet,
  kDemand,
  kFamilyUnits,
  kFamilyCars,
  kFamilyChoice,
  kPlatform,
  kBlockLink,
  kCouplingTime,
  kCouplingBan,
  kDecouplingBan,
  kCoupleOpposite,
  kCoupleSame,
  kDecoupleOpposite,
  kDecoupleSame,
  kPropagation,
  kOrderPresence,
  kOrderCount,
  kOrderActivation,
  kOrderDistinct,
};

const char* row_family_name(RowFamily f);
bool is_ordering_family(RowFamily f);

struct Term {
  int var;
  int64_t coef;
};

struct LinConstraint {
  std::vector<Term> terms;
  Sense sense = Sense::kLe;
  int64_t rhs = 0;
  RowFamily family = RowFamily::kReuse;
  std::string tag;
};

struct ModelFeatures {
  bool families = false;
  bool blockflow = false;
  bool platform_length = true;

  static ModelFeatures all() { return {true, true, true}; }
};

struct ModelOptions {
  ModelFeatures features;
  std::optional<ObjectiveWeights> weights;  // overrides the fleet config profile
};

// One linearization decision and what it did to the instance size,
// relative to a literal reading of the quantifiers.
struct Deviation {
  std::string decision;
  int64_t variables_delta = 0;
  int64_t rows_delta = 0;
  std::string note;
};

struct ModelMeta {
  std::map<std::string, int64_t> rows_per_family;
  std::map<std::string, int64_t> vars_per_class;
  int64_t big_m = 0;
  std::vector<Deviation> deviations;
  int64_t literal_variables = 0;
  int64_t literal_rows = 0;
};

using Solution = std::vector<int64_t>;

class MilpInstance {
 public:
  const SchedulingGraph& graph() const { return *graph_; }
  const FleetConfig& fleet() const { return fleet_; }
  const ObjectiveWeights& weights() const { return weights_; }
  const ModelOptions& options() const { return options_; }
  const std::vector<Unit>& units() const { return units_; }
  int num_units() const { return static_cast<int>(units_.size()); }

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<LinConstraint>& constraints() const { return rows_; }
  const std::vector<double>& objective() const { return obj_; }  // dense, one per variable
  const ModelMeta& meta() const { return meta_; }
  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }

  // Variable lookups; -1 when the variable does not exist.
  int x(int arc, int unit) const { return x_.at(static_cast<size_t>(arc) * units_.size() + unit); }
  int theta(int trip, int unit) const {
    return theta_.at(static_cast<size_t>(trip) * units_.size() + unit);
  }
  int pair(int trip, int h1, int h2) const;
  int family_var(int trip, int family) const;
  int block(int arc) const { return z_.empty() ? -1 : z_.at(arc); }

  // Objective pieces: per unit on a trip, and per unit on an arc.
  double unit_trip_cost(int type, int trip) const;
  double arc_cost(int type, int arc) const;
  bool may_couple(int type1, int type2) const;
  // Trip j is banned from coupling before departure / decoupling after arrival.
  bool coupling_banned_before(int trip) const;
  bool decoupling_banned_after(int trip) const;
  // Platform bound for a trip, if any.
  std::optional<int> platform_limit(int trip) const;

  double evaluate(const Solution& s) const;
  // Indices of rows violated by s, using exact integer arithmetic.
  std::vector<int> violated_rows(const Solution& s) const;
  bool row_satisfied(int row, const Solution& s) const;

 private:
  friend MilpInstance build_model(const SchedulingGraph&, const FleetConfig&, const ModelOptions&);

  std::shared_ptr<const SchedulingGraph> graph_;
  FleetConfig fleet_;
  ObjectiveWeights weights_;
  ModelOptions options_;
  std::vector<Unit> units_;
  std::vector<Variable> vars_;
  std::vector<LinConstraint> rows_;
  std::vector<double> obj_;
  ModelMeta meta_;
  std::vector<int> x_, theta_, z_;
  std::map<std::tuple<int, int, int>, int> pair_;
  std::map<std::pair<int, int>, int> family_;
};

MilpInstance build_model(const SchedulingGraph& g, const FleetConfig& fleet,
                         const ModelOptions& opts = {});

// The ordering and propagation rows alone, on a freshly built instance.
std::vector<LinConstraint> linearize_ordering(const MilpInstance& m);
std::vector<LinConstraint> order_variable_rows(const MilpInstance& m);

std::string to_lp_string(const MilpInstance& m,
                         const std::vector<std::pair<int, int64_t>>& fixings = {});
void export_lp(const MilpInstance& m, const std::filesystem::path& path,
               const std::vector<std::pair<int, int64_t>>& fixings = {});
// Structural check of an LP-format document; returns the problems found.
std::vector<std::string> validate_lp_text(const std::string& text);

nlohmann::json model_stats(const MilpInstance& m);

}  // namespace tus
