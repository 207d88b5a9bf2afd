#include "tus/timetable.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tus/errors.hpp"

namespace tus {

namespace {

constexpr std::string_view kHeader =
    "Trip,Departure station,Arrival station,Departure time,Arrival time,Passenger demand,Direction";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<int> to_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Splits one CSV record; double quotes protect commas.
std::vector<std::string> split_csv(std::string_view line, int row) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote", row);
  out.emplace_back(trim(cur));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

Timetable::Timetable(std::vector<Trip> trips) : trips_(std::move(trips)) {
  for (int i = 0; i < size(); ++i) {
    if (!index_.emplace(trips_[i].id, i).second) {
      throw ValidationError("duplicate trip id '" + trips_[i].id + "'");
    }
  }
}

int Timetable::index_of(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

std::set<std::string> Timetable::stations() const {
  std::set<std::string> s;
  for (const auto& t : trips_) {
    s.insert(t.dep_station);
    s.insert(t.arr_station);
  }
  return s;
}

void EmptyRunMatrix::set(const std::string& from, const std::string& to, Minutes minutes) {
  times_[{from, to}] = minutes;
}

std::optional<Minutes> EmptyRunMatrix::travel_time(const std::string& from,
                                                   const std::string& to) const {
  auto it = times_.find({from, to});
  if (it == times_.end()) return std::nullopt;
  return it->second;
}

int FleetConfig::type_index(std::string_view id) const {
  for (size_t t = 0; t < types.size(); ++t) {
    if (types[t].id == id) return static_cast<int>(t);
  }
  return -1;
}

const StationRules* FleetConfig::station(std::string_view name) const {
  for (const auto& s : stations) {
    if (s.station == name) return &s;
  }
  return nullptr;
}

Minutes FleetConfig::min_turnaround(std::string_view name) const {
  const StationRules* s = station(name);
  if (s && s->min_turnaround) return *s->min_turnaround;
  return default_min_turnaround;
}

int FleetConfig::total_fleet() const {
  int n = 0;
  for (const auto& t : types) n += t.fleet_size;
  return n;
}

bool FleetConfig::type_may_serve(int type, const Trip& trip) const {
  auto it = restrictions.find(trip.id);
  if (it == restrictions.end()) return true;
  const std::string& id = types.at(type).id;
  return std::find(it->second.begin(), it->second.end(), id) != it->second.end();
}

std::vector<Unit> FleetConfig::units() const {
  std::vector<Unit> out;
  for (size_t t = 0; t < types.size(); ++t) {
    for (int k = 0; k < types[t].fleet_size; ++k) {
      out.push_back({static_cast<int>(out.size()), static_cast<int>(t), k});
    }
  }
  return out;
}

int FleetConfig::first_uid(int type) const {
  int uid = 0;
  for (int t = 0; t < type; ++t) uid += types.at(t).fleet_size;
  return uid;
}

Minutes parse_time(std::string_view text) {
  text = trim(text);
  if (text.find(':') == std::string_view::npos) {
    auto v = to_int(text);
    if (!v) throw ParseError("bad time '" + std::string(text) + "'");
    return *v;
  }
  std::vector<int> parts;
  size_t start = 0;
  while (true) {
    size_t colon = text.find(':', start);
    auto piece = text.substr(start, colon == std::string_view::npos ? text.npos : colon - start);
    auto v = to_int(piece);
    if (!v || *v < 0) throw ParseError("bad time '" + std::string(text) + "'");
    parts.push_back(*v);
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() > 3 || parts[1] >= 60 || (parts.size() == 3 && parts[2] >= 60)) {
    throw ParseError("bad time '" + std::string(text) + "'");
  }
  // seconds are truncated
  return parts[0] * 60 + parts[1];
}

Timetable parse_timetable_text(std::string_view text) {
  std::vector<Trip> trips;
  std::set<std::string> seen;
  int row = 0;
  bool header_seen = false;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == text.npos ? text.npos : nl - pos);
    pos = nl == text.npos ? text.size() + 1 : nl + 1;
    ++row;
    if (trim(line).empty()) continue;
    if (!header_seen) {
      if (trim(line) != kHeader) throw ParseError("unexpected header", row);
      header_seen = true;
      continue;
    }
    auto f = split_csv(line, row);
    if (f.size() != 7) throw ParseError("expected 7 fields, got " + std::to_string(f.size()), row);
    Trip t;
    t.id = f[0];
    t.dep_station = f[1];
    t.arr_station = f[2];
    if (t.id.empty() || t.dep_station.empty() || t.arr_station.empty()) {
      throw ParseError("empty field", row);
    }
    try {
      t.dep_time = parse_time(f[3]);
      t.arr_time = parse_time(f[4]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), row);
    }
    auto demand = to_int(f[5]);
    if (!demand || *demand < 0) throw ParseError("bad demand '" + f[5] + "'", row);
    t.demand = *demand;
    auto dir = to_int(f[6]);
    if (!dir || (*dir != 1 && *dir != -1)) throw ParseError("bad direction '" + f[6] + "'", row);
    t.direction = *dir;
    if (!seen.insert(t.id).second) throw ValidationError("duplicate trip id '" + t.id + "' at row " + std::to_string(row));
    trips.push_back(std::move(t));
  }
  if (!header_seen) throw ParseError("missing header", 1);
  return Timetable(std::move(trips));
}

Timetable parse_timetable(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_timetable_text(ss.str());
}

std::string serialize_timetable(const Timetable& tt) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& t : tt.trips()) {
    out += csv_field(t.id) + ',' + csv_field(t.dep_station) + ',' + csv_field(t.arr_station) + ',' +
           std::to_string(t.dep_time) + ',' + std::to_string(t.arr_time) + ',' +
           std::to_string(t.demand) + ',' + std::to_string(t.direction) + '\n';
  }
  return out;
}

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

std::map<std::pair<std::string, std::string>, double> keyed_table(const json& arr,
                                                                  const char* second) {
  std::map<std::pair<std::string, std::string>, double> out;
  for (const auto& e : arr) {
    out[{e.at("type").get<std::string>(), e.at(second).get<std::string>()}] =
        e.at("value").get<double>();
  }
  return out;
}

json table_json(const std::map<std::pair<std::string, std::string>, double>& m,
                const char* second) {
  json arr = json::array();
  for (const auto& [k, v] : m) arr.push_back({{"type", k.first}, {second, k.second}, {"value", v}});
  return arr;
}

ObjectiveWeights weights_from_json(const json& w) {
  ObjectiveWeights out;
  for (int k = 1; k <= 7; ++k) {
    std::string key = "W" + std::to_string(k);
    if (w.contains(key)) out.w[k - 1] = w[key].get<double>();
    if (out.w[k - 1] < 0) throw ValidationError("weight " + key + " is negative");
  }
  out.mileage = keyed_table(w.value("mileage", json::array()), "trip");
  out.long_gap = keyed_table(w.value("long_gap", json::array()), "arc");
  out.trip_preference = keyed_table(w.value("trip_preference", json::array()), "trip");
  out.arc_preference = keyed_table(w.value("arc_preference", json::array()), "arc");
  return out;
}

}  // namespace

ObjectiveWeights parse_weights(std::string_view text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("weights: ") + e.what());
  }
  try {
    return weights_from_json(j.contains("weights") ? j["weights"] : j);
  } catch (const json::exception& e) {
    throw ParseError(std::string("weights: ") + e.what());
  }
}

FleetConfig parse_fleet_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("fleet config: ") + e.what());
  }
  FleetConfig fc;
  try {
    for (const auto& u : j.at("unit_types")) {
      UnitType t;
      t.id = u.at("id").is_string() ? u.at("id").get<std::string>() : u.at("id").dump();
      t.capacity = u.at("capacity").get<int>();
      t.fleet_size = u.at("fleet_size").get<int>();
      t.num_cars = get_or(u, "num_cars", 1);
      t.car_length = get_or(u, "car_length", 0);
      if (t.capacity <= 0) throw ValidationError("unit type " + t.id + ": capacity must be positive");
      if (t.fleet_size < 0) throw ValidationError("unit type " + t.id + ": negative fleet size");
      if (fc.type_index(t.id) >= 0) throw ValidationError("duplicate unit type " + t.id);
      fc.types.push_back(t);
    }
    fc.default_min_turnaround = get_or(j, "default_min_turnaround", 10);
    for (const auto& s : j.value("stations", json::array())) {
      StationRules r;
      r.station = s.at("station").get<std::string>();
      if (s.contains("min_turnaround")) r.min_turnaround = s["min_turnaround"].get<int>();
      r.couple_time = get_or(s, "couple_time", 0);
      r.decouple_time = get_or(s, "decouple_time", 0);
      r.coupling_banned_arrival = get_or(s, "coupling_banned_arrival", false);
      r.coupling_banned_departure = get_or(s, "coupling_banned_departure", false);
      if (s.contains("platform_length")) r.platform_length = s["platform_length"].get<int>();
      if (s.contains("shunt_min_dwell")) r.shunt_min_dwell = s["shunt_min_dwell"].get<int>();
      if (r.couple_time < 0 || r.decouple_time < 0 || r.min_turnaround.value_or(0) < 0) {
        throw ValidationError("station " + r.station + ": negative time");
      }
      fc.stations.push_back(r);
    }
    for (const auto& f : j.value("families", json::array())) {
      FamilyRules fam;
      fam.name = get_or<std::string>(f, "name", "f" + std::to_string(fc.families.size()));
      for (const auto& tid : f.at("types")) {
        int t = fc.type_index(tid.get<std::string>());
        if (t < 0) throw ValidationError("family " + fam.name + ": unknown type " + tid.get<std::string>());
        fam.types.push_back(t);
      }
      fam.max_units = f.at("max_units").get<int>();
      fam.max_cars = get_or(f, "max_cars", 1 << 20);
      if (fam.max_units < 1) throw ValidationError("family " + fam.name + ": max_units < 1");
      fc.families.push_back(fam);
    }
    for (const auto& e : j.value("empty_runs", json::array())) {
      int m = e.at("minutes").get<int>();
      if (m < 0) throw ValidationError("negative empty-run time");
      fc.empty_runs.set(e.at("from").get<std::string>(), e.at("to").get<std::string>(), m);
    }
    if (j.contains("weights")) fc.weights = weights_from_json(j["weights"]);
    for (const auto& r : j.value("restrictions", json::array())) {
      fc.restrictions[r.at("trip").get<std::string>()] = r.at("types").get<std::vector<std::string>>();
    }
    for (const auto& s : j.value("shunt_allowed", json::array())) {
      fc.shunt_allowed.insert({s.at("from").get<std::string>(), s.at("to").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("fleet config: ") + e.what());
  }
  return fc;
}

FleetConfig load_fleet_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_fleet_config(ss.str());
}

std::string serialize_fleet_config(const FleetConfig& fc) {
  json j;
  j["unit_types"] = json::array();
  for (const auto& t : fc.types) {
    j["unit_types"].push_back({{"id", t.id},
                               {"capacity", t.capacity},
                               {"fleet_size", t.fleet_size},
                               {"num_cars", t.num_cars},
                               {"car_length", t.car_length}});
  }
  j["default_min_turnaround"] = fc.default_min_turnaround;
  j["stations"] = json::array();
  for (const auto& s : fc.stations) {
    json o = {{"station", s.station},
              {"couple_time", s.couple_time},
              {"decouple_time", s.decouple_time},
              {"coupling_banned_arrival", s.coupling_banned_arrival},
              {"coupling_banned_departure", s.coupling_banned_departure}};
    if (s.min_turnaround) o["min_turnaround"] = *s.min_turnaround;
    if (s.platform_length) o["platform_length"] = *s.platform_length;
    if (s.shunt_min_dwell) o["shunt_min_dwell"] = *s.shunt_min_dwell;
    j["stations"].push_back(o);
  }
  j["families"] = json::array();
  for (const auto& f : fc.families) {
    json types = json::array();
    for (int t : f.types) types.push_back(fc.types[t].id);
    j["families"].push_back(
        {{"name", f.name}, {"types", types}, {"max_units", f.max_units}, {"max_cars", f.max_cars}});
  }
  j["empty_runs"] = json::array();
  for (const auto& [k, v] : fc.empty_runs.entries()) {
    j["empty_runs"].push_back({{"from", k.first}, {"to", k.second}, {"minutes", v}});
  }
  json w;
  for (int k = 1; k <= 7; ++k) w["W" + std::to_string(k)] = fc.weights.W(k);
  w["mileage"] = table_json(fc.weights.mileage, "trip");
  w["long_gap"] = table_json(fc.weights.long_gap, "arc");
  w["trip_preference"] = table_json(fc.weights.trip_preference, "trip");
  w["arc_preference"] = table_json(fc.weights.arc_preference, "arc");
  j["weights"] = w;
  j["restrictions"] = json::array();
  for (const auto& [trip, types] : fc.restrictions) {
    j["restrictions"].push_back({{"trip", trip}, {"types", types}});
  }
  j["shunt_allowed"] = json::array();
  for (const auto& [a, b] : fc.shunt_allowed) j["shunt_allowed"].push_back({{"from", a}, {"to", b}});
  return j.dump(2) + "\n";
}

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(findings.begin(), findings.end(),
                     [&](const Finding& f) { return f.code == code; });
}

ValidationReport validate_instance(const Timetable& tt, const FleetConfig& fleet) {
  ValidationReport rep;
  auto add = [&](std::string code, std::string msg) {
    rep.findings.push_back({std::move(code), std::move(msg)});
  };
  const auto stations = tt.stations();
  for (const auto& t : tt.trips()) {
    if (t.arr_time <= t.dep_time) add("nonpositive duration", "trip " + t.id);
    if (t.dep_time < 0) add("negative time", "trip " + t.id);
    long cap = 0;
    bool servable = false;
    for (int k = 0; k < static_cast<int>(fleet.types.size()); ++k) {
      if (!fleet.type_may_serve(k, t)) continue;
      cap += static_cast<long>(fleet.types[k].capacity) * fleet.types[k].fleet_size;
      servable = servable || fleet.types[k].fleet_size > 0;
    }
    if (!servable) add("unservable trip", "trip " + t.id + " has no permitted unit type");
    if (cap < t.demand) {
      add("uncoverable demand", "trip " + t.id + " demand " + std::to_string(t.demand) +
                                    " exceeds fleet capacity " + std::to_string(cap));
    }
  }
  for (const auto& [key, minutes] : fleet.empty_runs.entries()) {
    for (const auto& s : {key.first, key.second}) {
      if (!stations.count(s)) add("unknown station", "empty run references " + s);
    }
  }
  for (const auto& s : fleet.stations) {
    if (!stations.count(s.station)) add("unknown station", "station rules for " + s.station);
  }
  for (const auto& [trip, types] : fleet.restrictions) {
    if (tt.index_of(trip) < 0) add("unknown trip", "restriction on " + trip);
    for (const auto& id : types) {
      if (fleet.type_index(id) < 0) add("unknown type", "restriction on " + trip + " names " + id);
    }
  }
  if (!fleet.families.empty()) {
    for (int k = 0; k < static_cast<int>(fleet.types.size()); ++k) {
      bool in_family = std::any_of(fleet.families.begin(), fleet.families.end(), [&](const FamilyRules& f) {
        return std::find(f.types.begin(), f.types.end(), k) != f.types.end();
      });
      if (!in_family) add("type without family", "type " + fleet.types[k].id);
    }
  }
  return rep;
}

}  // namespace tus
