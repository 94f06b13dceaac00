#ifndef DRM_REPORT_HPP
#define DRM_REPORT_HPP

// Run reports: verdicts with tolerances and margins, free-form results, CSV
// tables and metadata. Everything except the "timing" block is a pure
// function of the config and seed.

#include "drm/hierarchy.hpp"
#include "drm/io.hpp"

#include <boost/version.hpp>
#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace drm {

inline constexpr const char* kVersion = "0.1.0";

// Shortest round-trip decimal form of a double.
inline std::string format_number(double x) {
  if(std::isnan(x)) return "nan";
  if(std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  for(int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if(std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

class CsvTable {
public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  // Cells are strings or numbers.
  struct Cell {
    std::string text;
    Cell(const char* s) : text(s) {}
    Cell(std::string s) : text(std::move(s)) {}
    Cell(double x) : text(format_number(x)) {}
    Cell(int x) : text(std::to_string(x)) {}
    Cell(std::size_t x) : text(std::to_string(x)) {}
    Cell(bool b) : text(b ? "true" : "false") {}
  };

  void add(std::vector<Cell> row) {
    if(row.size() != header_.size()) throw std::logic_error("CsvTable: row width does not match header");
    std::vector<std::string> r;
    for(auto& c: row) r.push_back(std::move(c.text));
    rows_.push_back(std::move(r));
  }

  std::size_t rows() const noexcept { return rows_.size(); }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for(std::size_t i = 0; i < cells.size(); ++i) {
        if(i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header_);
    for(const auto& r: rows_) line(r);
    return out;
  }

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct Verdict {
  std::string name;
  std::string relation; // "<=", ">=", "<", ">", "=="
  double observed = 0.0;
  double limit = 0.0;
  bool hard = true; // soft verdicts are reported but do not affect the exit code
  bool pass = false;
  std::string note;

  // Distance to the limit, positive on the passing side.
  double margin() const {
    if(relation == "<=" || relation == "<") return limit - observed;
    if(relation == ">=" || relation == ">") return observed - limit;
    return -std::abs(observed - limit);
  }
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for(unsigned char c: s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

class RunReport {
public:
  RunReport(std::string command, const json& config, std::uint64_t seed)
      : command_(std::move(command)), seed_(seed), start_(std::chrono::steady_clock::now()) {
    config_hash_ = hex64(fnv1a64(config.dump()));
  }

  // observed <relation> limit. NaN observations abort the run.
  Verdict& check(const std::string& name, double observed, const std::string& relation, double limit,
                 std::string note = {}, bool hard = true) {
    if(std::isnan(observed)) throw NumericalAbort("NaN in " + name);
    Verdict v{name, relation, observed, limit, hard, false, std::move(note)};
    if(relation == "<=") v.pass = observed <= limit;
    else if(relation == "<") v.pass = observed < limit;
    else if(relation == ">=") v.pass = observed >= limit;
    else if(relation == ">") v.pass = observed > limit;
    else if(relation == "==") v.pass = observed == limit;
    else throw std::logic_error("unknown relation " + relation);
    verdicts_.push_back(std::move(v));
    return verdicts_.back();
  }

  // A boolean verdict (observed 1 or 0 against 1).
  Verdict& require(const std::string& name, bool ok, std::string note = {}, bool hard = true) {
    return check(name, ok ? 1.0 : 0.0, "==", 1.0, std::move(note), hard);
  }

  json& results() { return results_; }
  const json& results() const { return results_; }
  CsvTable& table(const std::string& name, std::vector<std::string> header) {
    return tables_.try_emplace(name, std::move(header)).first->second;
  }
  const std::map<std::string, CsvTable>& tables() const { return tables_; }
  const std::vector<Verdict>& verdicts() const { return verdicts_; }

  void section_time(const std::string& name, double seconds) { sections_[name] = seconds; }
  // Seconds since the report was created, or until stop() was called.
  double elapsed() const {
    if(stopped_) return *stopped_;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void stop() {
    if(!stopped_) stopped_ = elapsed();
  }

  bool pass() const {
    for(const auto& v: verdicts_) {
      if(v.hard && !v.pass) return false;
    }
    return true;
  }

  const std::string& command() const { return command_; }
  std::uint64_t seed() const { return seed_; }

  // The timing block is the only part that varies between identical runs.
  json to_json(bool with_timing = true) const {
    json j;
    j["command"] = command_;
    j["pass"] = pass();
    j["metadata"] = {{"config_hash", "fnv1a64:" + config_hash_},
                     {"seed", seed_},
                     {"version", kVersion},
                     {"libraries",
                      {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                     std::to_string(EIGEN_MINOR_VERSION)},
                       {"boost", BOOST_LIB_VERSION}}}};
    json vs = json::array();
    for(const auto& v: verdicts_) {
      json e = {{"name", v.name},     {"pass", v.pass},     {"hard", v.hard},     {"observed", v.observed},
                {"relation", v.relation}, {"tolerance", v.limit}, {"margin", v.margin()}};
      if(!v.note.empty()) e["note"] = v.note;
      vs.push_back(std::move(e));
    }
    j["verdicts"] = std::move(vs);
    j["results"] = results_;
    json names = json::array();
    for(const auto& [name, t]: tables_) names.push_back(name + ".csv");
    j["tables"] = std::move(names);
    if(with_timing) {
      json sections = json::object();
      for(const auto& [k, v]: sections_) sections[k] = v;
      j["timing"] = {{"wall_seconds", elapsed()}, {"sections", sections}};
    }
    return j;
  }

private:
  std::string command_;
  std::uint64_t seed_;
  std::string config_hash_;
  std::chrono::steady_clock::time_point start_;
  std::optional<double> stopped_;
  std::vector<Verdict> verdicts_;
  json results_ = json::object();
  std::map<std::string, CsvTable> tables_;
  std::map<std::string, double> sections_;
};

// Times a block into the report's timing section.
class SectionTimer {
public:
  SectionTimer(RunReport& r, std::string name)
      : r_(r), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~SectionTimer() {
    r_.section_time(name_, std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
  }
  SectionTimer(const SectionTimer&) = delete;
  SectionTimer& operator=(const SectionTimer&) = delete;

private:
  RunReport& r_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

} // namespace drm

#endif // DRM_REPORT_HPP
