#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tus {

using Minutes = int;

struct Trip {
  std::string id;
  std::string dep_station;
  std::string arr_station;
  Minutes dep_time = 0;
  Minutes arr_time = 0;
  int demand = 0;
  int direction = 1;  // +1 or -1

  Minutes duration() const { return arr_time - dep_time; }
};

class Timetable {
 public:
  Timetable() = default;
  explicit Timetable(std::vector<Trip> trips);

  const std::vector<Trip>& trips() const { return trips_; }
  const Trip& trip(int index) const { return trips_.at(index); }
  int size() const { return static_cast<int>(trips_.size()); }
  bool empty() const { return trips_.empty(); }
  // -1 when absent.
  int index_of(std::string_view id) const;
  std::set<std::string> stations() const;

 private:
  std::vector<Trip> trips_;
  std::map<std::string, int, std::less<>> index_;
};

struct UnitType {
  std::string id;
  int capacity = 0;
  int fleet_size = 0;
  int num_cars = 1;
  int car_length = 0;  // length of one unit of this type, meters
};

struct Unit {
  int uid = 0;
  int type = 0;
  int index_in_type = 0;
};

struct StationRules {
  std::string station;
  std::optional<Minutes> min_turnaround;
  Minutes couple_time = 0;
  Minutes decouple_time = 0;
  bool coupling_banned_arrival = false;    // no decoupling of arriving trains
  bool coupling_banned_departure = false;  // no coupling of departing trains
  std::optional<int> platform_length;
  // Connections dwelling at least this long may be shunted.
  std::optional<Minutes> shunt_min_dwell;
};

struct FamilyRules {
  std::string name;
  std::vector<int> types;
  int max_units = 1;
  int max_cars = 1;
};

class EmptyRunMatrix {
 public:
  void set(const std::string& from, const std::string& to, Minutes minutes);
  std::optional<Minutes> travel_time(const std::string& from, const std::string& to) const;
  const std::map<std::pair<std::string, std::string>, Minutes>& entries() const { return times_; }

 private:
  std::map<std::pair<std::string, std::string>, Minutes> times_;
};

// Keys are (type id, trip id) or (type id, "from>to") for arcs.
struct ObjectiveWeights {
  std::array<double, 7> w{10000, 1, 50, 0, 0, 0, 0};
  std::map<std::pair<std::string, std::string>, double> mileage;
  std::map<std::pair<std::string, std::string>, double> long_gap;
  std::map<std::pair<std::string, std::string>, double> trip_preference;
  // Arc key is "on>trip" or "trip>off".
  std::map<std::pair<std::string, std::string>, double> arc_preference;

  double W(int k) const { return w.at(k - 1); }
};

struct FleetConfig {
  std::vector<UnitType> types;
  Minutes default_min_turnaround = 10;
  std::vector<StationRules> stations;
  std::vector<FamilyRules> families;
  EmptyRunMatrix empty_runs;
  ObjectiveWeights weights;
  // trip id -> permitted type ids; trips not listed accept every type
  std::map<std::string, std::vector<std::string>> restrictions;
  std::set<std::pair<std::string, std::string>> shunt_allowed;

  int type_index(std::string_view id) const;
  const StationRules* station(std::string_view name) const;
  Minutes min_turnaround(std::string_view station) const;
  int total_fleet() const;
  bool type_may_serve(int type, const Trip& trip) const;
  std::vector<Unit> units() const;
  int first_uid(int type) const;
};

Minutes parse_time(std::string_view text);

Timetable parse_timetable(const std::filesystem::path& path);
Timetable parse_timetable_text(std::string_view text);
std::string serialize_timetable(const Timetable& tt);

FleetConfig load_fleet_config(const std::filesystem::path& path);
FleetConfig parse_fleet_config(std::string_view text);
std::string serialize_fleet_config(const FleetConfig& fleet);
// Accepts {"weights": {...}} or the weights object itself.
ObjectiveWeights parse_weights(std::string_view text);

struct Finding {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;
  bool admissible() const { return findings.empty(); }
  bool has(std::string_view code) const;
};

ValidationReport validate_instance(const Timetable& tt, const FleetConfig& fleet);

}  // namespace tus
