#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tus/errors.hpp"
#include "tus/model.hpp"

namespace tus {

namespace {

constexpr int kTermsPerLine = 8;

std::string number(double v) {
  if (std::floor(v) == v && std::fabs(v) < 1e15) return std::to_string(static_cast<int64_t>(v));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_terms(std::ostringstream& os, const std::vector<std::pair<std::string, double>>& terms) {
  int on_line = 0;
  bool first = true;
  for (const auto& [name, c] : terms) {
    if (on_line == kTermsPerLine) {
      os << "\n   ";
      on_line = 0;
    }
    if (c < 0) {
      os << " - ";
    } else if (!first) {
      os << " + ";
    } else {
      os << ' ';
    }
    double a = std::fabs(c);
    if (a != 1) os << number(a) << ' ';
    os << name;
    first = false;
    ++on_line;
  }
  if (first) os << " 0";
}

}  // namespace

std::string to_lp_string(const MilpInstance& m, const std::vector<std::pair<int, int64_t>>& fixings) {
  const auto& vars = m.variables();
  std::ostringstream os;
  os << "\\ train unit schedule model\n";
  os << "Minimize\n obj:";
  std::vector<std::pair<std::string, double>> obj;
  for (int k = 0; k < m.num_vars(); ++k) {
    if (m.objective()[k] != 0) obj.emplace_back(vars[k].name, m.objective()[k]);
  }
  write_terms(os, obj);
  os << "\nSubject To\n";
  for (int r = 0; r < m.num_rows(); ++r) {
    const auto& row = m.constraints()[r];
    os << " r" << r << '_' << row_family_name(row.family) << ':';
    std::vector<std::pair<std::string, double>> terms;
    for (const auto& t : row.terms) terms.emplace_back(vars[t.var].name, static_cast<double>(t.coef));
    write_terms(os, terms);
    os << (row.sense == Sense::kLe ? " <= " : row.sense == Sense::kGe ? " >= " : " = ") << row.rhs << '\n';
  }
  std::map<int, int64_t> fixed(fixings.begin(), fixings.end());
  os << "Bounds\n";
  for (int k = 0; k < m.num_vars(); ++k) {
    const auto& v = vars[k];
    auto it = fixed.find(k);
    if (it != fixed.end()) {
      os << ' ' << v.name << " = " << it->second << '\n';
    } else if (!v.binary()) {
      os << ' ' << v.lo << " <= " << v.name << " <= " << v.hi << '\n';
    }
  }
  auto section = [&](const char* title, bool want_binary) {
    std::vector<std::string> names;
    for (const auto& v : vars) {
      if (v.binary() == want_binary) names.push_back(v.name);
    }
    if (names.empty()) return;
    os << title << '\n';
    for (size_t i = 0; i < names.size(); ++i) {
      os << (i % kTermsPerLine == 0 ? " " : " ") << names[i];
      if (i % kTermsPerLine == kTermsPerLine - 1 || i + 1 == names.size()) os << '\n';
    }
  };
  section("Binaries", true);
  section("Generals", false);
  os << "End\n";
  return os.str();
}

void export_lp(const MilpInstance& m, const std::filesystem::path& path,
               const std::vector<std::pair<int, int64_t>>& fixings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_lp_string(m, fixings);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> validate_lp_text(const std::string& text) {
  std::vector<std::string> problems;
  std::istringstream in(text);
  std::string line;
  enum { kNone, kObj, kRows, kBounds, kBin, kGen, kEnd } sec = kNone;
  std::set<std::string> used, declared;
  int rows = 0, obj_terms = 0;
  bool saw_obj = false, saw_rows = false, saw_end = false;
  auto is_name = [](const std::string& tok) {
    return !tok.empty() && (std::isalpha(static_cast<unsigned char>(tok[0])) || tok[0] == '_');
  };
  auto collect = [&](const std::string& expr, int& count) {
    std::istringstream ts(expr);
    std::string tok;
    while (ts >> tok) {
      if (tok == "+" || tok == "-" || tok == "<=" || tok == ">=" || tok == "=") continue;
      if (is_name(tok)) {
        used.insert(tok);
        ++count;
      }
    }
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '\\') continue;
    if (line == "Minimize" || line == "Maximize") {
      sec = kObj;
      saw_obj = true;
      continue;
    }
    if (line == "Subject To") { sec = kRows; saw_rows = true; continue; }
    if (line == "Bounds") { sec = kBounds; continue; }
    if (line == "Binaries") { sec = kBin; continue; }
    if (line == "Generals") { sec = kGen; continue; }
    if (line == "End") { sec = kEnd; saw_end = true; continue; }
    std::string body = line;
    auto colon = body.find(':');
    switch (sec) {
      case kObj:
        collect(colon == std::string::npos ? body : body.substr(colon + 1), obj_terms);
        break;
      case kRows: {
        int dummy = 0;
        if (colon != std::string::npos) {
          ++rows;
          body = body.substr(colon + 1);
        }
        collect(body, dummy);
        break;
      }
      case kBounds: {
        std::istringstream ts(body);
        std::string tok;
        while (ts >> tok) {
          if (is_name(tok)) declared.insert(tok);
        }
        break;
      }
      case kBin:
      case kGen: {
        std::istringstream ts(body);
        std::string tok;
        while (ts >> tok) declared.insert(tok);
        break;
      }
      case kEnd:
        problems.push_back("content after End");
        break;
      case kNone:
        problems.push_back("content before objective: " + line);
        break;
    }
  }
  if (!saw_obj) problems.push_back("missing objective section");
  if (!saw_rows || rows == 0) problems.push_back("no constraints");
  if (!saw_end) problems.push_back("missing End");
  if (obj_terms == 0 && rows == 0) problems.push_back("empty model");
  for (const auto& v : used) {
    if (!declared.count(v)) problems.push_back("undeclared variable " + v);
  }
  return problems;
}

}  // namespace tus
