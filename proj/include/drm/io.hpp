#ifndef DRM_IO_HPP
#define DRM_IO_HPP

// JSON forms of measures and grid configurations, plus the strict-object
// helpers the experiment configs are parsed with (unknown keys are errors).

#include "drm/cone.hpp"
#include "drm/discretization.hpp"

#include <json.hpp>

#include <cstdint>
#include <initializer_list>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace drm {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Reader over a JSON object that remembers which keys were consumed.
class ConfigObject {
public:
  ConfigObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if(!j_.is_object()) throw ConfigError(path_ + ": expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    used_.insert(key);
    if(!j_.contains(key)) throw ConfigError(path_ + ": missing key '" + key + "'");
    return j_.at(key);
  }

  template<typename T>
  T get(const std::string& key) {
    const json& v = at(key);
    try {
      return v.get<T>();
    } catch(const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  template<typename T>
  T get_or(const std::string& key, T fallback) {
    if(!j_.contains(key)) {
      used_.insert(key);
      return fallback;
    }
    return get<T>(key);
  }

  ConfigObject child(const std::string& key) { return ConfigObject(at(key), path_ + "." + key); }

  std::string path(const std::string& key) const { return path_ + "." + key; }

  // Throws on keys that were never read.
  void finish() const {
    for(auto it = j_.begin(); it != j_.end(); ++it) {
      if(!used_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline json position_to_json(const Position& p) {
  if(p.dim() == 1) return p[0];
  json arr = json::array();
  for(std::size_t i = 0; i < p.dim(); ++i) arr.push_back(p[i]);
  return arr;
}

inline Position position_from_json(const json& j) {
  if(j.is_number()) return Position(j.get<double>());
  if(!j.is_array()) throw ConfigError("position: expected a number or an array of numbers");
  const auto coords = j.get<std::vector<double>>();
  try {
    return Position::from_span(coords);
  } catch(const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// FiniteMeasure <-> [{"mark": s, "position": x}, ...] in canonical atom order.
inline json measure_to_json(const FiniteMeasure& eta) {
  json arr = json::array();
  for(const auto& a: eta.atoms()) arr.push_back(json{{"mark", a.mark}, {"position", position_to_json(a.position)}});
  return arr;
}

inline FiniteMeasure measure_from_json(const json& j) {
  if(!j.is_array()) throw ConfigError("measure: expected an array of {mark, position} records");
  std::vector<Atom> atoms;
  for(std::size_t i = 0; i < j.size(); ++i) {
    ConfigObject rec(j[i], "measure[" + std::to_string(i) + "]");
    Atom a;
    a.mark = rec.get<double>("mark");
    a.position = position_from_json(rec.at("position"));
    rec.finish();
    atoms.push_back(a);
  }
  try {
    return FiniteMeasure(std::move(atoms));
  } catch(const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// Box as [lo, hi] (d = 1) or [[lo_0, hi_0], ..., [lo_{d-1}, hi_{d-1}]].
inline Box box_from_json(const json& j, const std::string& path) {
  if(!j.is_array() || j.empty()) throw ConfigError(path + ": expected [lo, hi] or a list of [lo, hi]");
  std::vector<double> lo;
  std::vector<double> hi;
  if(j[0].is_number()) {
    if(j.size() != 2) throw ConfigError(path + ": expected [lo, hi]");
    lo.push_back(j[0].get<double>());
    hi.push_back(j[1].get<double>());
  } else {
    for(const auto& side: j) {
      if(!side.is_array() || side.size() != 2) throw ConfigError(path + ": each side must be [lo, hi]");
      lo.push_back(side[0].get<double>());
      hi.push_back(side[1].get<double>());
    }
  }
  Box box;
  try {
    box.lo = Position::from_span(lo);
    box.hi = Position::from_span(hi);
    box.validate();
  } catch(const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return box;
}

inline json box_to_json(const Box& box) {
  if(box.dim() == 1) return json::array({box.lo[0], box.hi[0]});
  json arr = json::array();
  for(std::size_t i = 0; i < box.dim(); ++i) arr.push_back(json::array({box.lo[i], box.hi[i]}));
  return arr;
}

// {mark_window: [a, b], theta, mark_nodes, box, space_nodes,
//  exclude_repeated_nodes, [nu_table: [[s, density], ...]], [sigma_density]}
inline GridConfig grid_config_from_json(const json& j, const std::string& path = "grid") {
  ConfigObject o(j, path);
  GridConfig cfg;
  const auto window = o.get<std::vector<double>>("mark_window");
  if(window.size() != 2) throw ConfigError(o.path("mark_window") + ": expected [a, b]");
  cfg.mark_lo = window[0];
  cfg.mark_hi = window[1];
  cfg.theta = o.get_or<double>("theta", 1.0);
  cfg.mark_nodes = o.get<std::size_t>("mark_nodes");
  cfg.box = box_from_json(o.at("box"), o.path("box"));
  const json& sn = o.at("space_nodes");
  if(sn.is_number_integer() && sn.get<long long>() > 0) {
    cfg.space_nodes.assign(cfg.box.dim(), sn.get<std::size_t>());
  } else if(sn.is_array()) {
    cfg.space_nodes = sn.get<std::vector<std::size_t>>();
  } else {
    throw ConfigError(o.path("space_nodes") + ": expected a count or one count per dimension");
  }
  cfg.exclude_repeated_nodes = o.get_or<bool>("exclude_repeated_nodes", true);
  cfg.sigma_density = o.get_or<double>("sigma_density", 1.0);
  if(o.has("nu_table")) {
    for(const auto& row: o.at("nu_table")) {
      if(!row.is_array() || row.size() != 2) throw ConfigError(o.path("nu_table") + ": rows must be [s, density]");
      cfg.nu_table_s.push_back(row[0].get<double>());
      cfg.nu_table_values.push_back(row[1].get<double>());
    }
  }
  o.finish();
  if(!(cfg.mark_lo > 0.0) || !(cfg.mark_hi > cfg.mark_lo)) {
    throw ConfigError(o.path("mark_window") + ": need 0 < a < b");
  }
  return cfg;
}

inline GridSpec grid_from_json(const json& j, const std::string& path = "grid") {
  const auto cfg = grid_config_from_json(j, path);
  try {
    return build_grid(cfg);
  } catch(const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

} // namespace drm

#endif // DRM_IO_HPP
