// Acceptance suite: runs the shipped presets and prints one PASS/FAIL line
// per criterion. Exit status is nonzero if any criterion fails.

#include "drm/experiments.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace {

using drm::json;
using drm::RunReport;

struct Run {
  std::string preset;
  RunReport report;
};

json load_preset(const std::string& name) {
  const auto path = std::filesystem::path(DRM_PRESET_DIR) / (name + ".json");
  std::ifstream in(path);
  if(!in) throw std::runtime_error("missing preset " + path.string());
  return json::parse(in, nullptr, true, true);
}

RunReport run_preset(const std::string& name) {
  const auto cfg = load_preset(name);
  return drm::run_experiment(cfg.at("command").get<std::string>(), cfg);
}

// Hard verdicts whose names start with one of the prefixes. Empty prefix list
// means every hard verdict.
struct Tally {
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::string first_failure;
  double worst_margin = HUGE_VAL;
};

Tally tally(const RunReport& r, const std::vector<std::string>& prefixes) {
  Tally t;
  for(const auto& v: r.verdicts()) {
    if(!v.hard) continue;
    bool match = prefixes.empty();
    for(const auto& p: prefixes) match = match || v.name.rfind(p, 0) == 0;
    if(!match) continue;
    ++t.checked;
    t.worst_margin = std::min(t.worst_margin, v.margin());
    if(!v.pass) {
      if(t.failed++ == 0) {
        t.first_failure = v.name + " observed " + drm::format_number(v.observed) + " " + v.relation + " " +
                          drm::format_number(v.limit);
      }
    }
  }
  return t;
}

double section_seconds(const RunReport& r, const std::string& section) {
  const auto j = r.to_json(true);
  const auto& s = j.at("timing").at("sections");
  return s.contains(section) ? s.at(section).get<double>() : 0.0;
}

double wall_seconds(const RunReport& r) { return r.to_json(true).at("timing").at("wall_seconds").get<double>(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void need(bool ok, const std::string& what) {
    if(!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

// Requires at least one matching verdict and no failures.
void need_verdicts(Outcome& o, const RunReport& r, const std::vector<std::string>& prefixes, const std::string& what) {
  const auto t = tally(r, prefixes);
  o.need(t.checked > 0, what + ": no verdicts");
  o.need(t.failed == 0, what + ": " + std::to_string(t.failed) + " of " + std::to_string(t.checked) + " fail (" +
                            t.first_failure + ")");
}

void need_runtime(Outcome& o, double seconds, double limit, const std::string& what) {
  o.need(seconds < limit, what + " took " + drm::format_number(seconds) + " s (limit " + drm::format_number(limit) + " s)");
  o.detail += (o.detail.empty() ? "" : "; ") + what + " " + drm::format_number(std::round(seconds * 100.0) / 100.0) + " s";
}

std::string fingerprint(const RunReport& r) {
  std::string s = r.to_json(false).dump();
  for(const auto& [name, t]: r.tables()) s += "\n#" + name + "\n" + t.str();
  return s;
}

} // namespace

int main() {
  const std::vector<std::string> presets{"identities",
                                         "contact_duality_positivity",
                                         "contact_upper_rneg",
                                         "contact_upper_rpos",
                                         "contact_lower",
                                         "bdlp_conditions",
                                         "bdlp_conditions_violating",
                                         "bdlp_run",
                                         "glauber_sample",
                                         "glauber_gnz_zero",
                                         "glauber_gnz_positive",
                                         "glauber_bounds"};
  std::map<std::string, RunReport> runs;
  drm::set_thread_count(1);
  for(const auto& p: presets) {
    try {
      runs.emplace(p, run_preset(p));
    } catch(const std::exception& e) {
      std::cerr << "preset " << p << " aborted: " << e.what() << '\n';
      return 2;
    }
  }
  auto R = [&](const std::string& p) -> const RunReport& { return runs.at(p); };

  std::vector<std::pair<std::string, Outcome>> lines;
  auto criterion = [&](const std::string& title, const std::function<void(Outcome&)>& body) {
    Outcome o;
    try {
      body(o);
    } catch(const std::exception& e) {
      o.need(false, std::string("exception: ") + e.what());
    }
    lines.emplace_back(title, o);
  };

  criterion("1 K-calculus exactness", [&](Outcome& o) {
    need_verdicts(o, R("identities"), {"k_calculus."}, "k_calculus");
    o.need(R("identities").results().at("k_calculus").at("samples").get<int>() >= 200, "fewer than 200 samples");
    need_runtime(o, section_seconds(R("identities"), "k_calculus"), 10.0, "k_calculus");
  });
  criterion("2 Minlos identities", [&](Outcome& o) {
    need_verdicts(o, R("identities"), {"minlos."}, "minlos");
    const auto& m = R("identities").results().at("minlos");
    o.need(m.at("n_max").get<int>() == 12 && m.at("samples").get<int>() >= 50, "wrong N_max or sample count");
    need_runtime(o, section_seconds(R("identities"), "minlos"), 60.0, "minlos");
  });
  criterion("3 Lebesgue-Poisson exponential", [&](Outcome& o) {
    need_verdicts(o, R("identities"), {"lp_exponential."}, "lp_exponential");
    o.need(R("identities").results().at("lp_exponential").at("grid_mass").get<double>() <= 2.0, "grid mass above 2");
  });
  criterion("4 Contact duality", [&](Outcome& o) {
    need_verdicts(o, R("contact_duality_positivity"), {"duality."}, "duality");
  });
  criterion("5 Contact positivity and Duhamel vs RK4", [&](Outcome& o) {
    const auto& r = R("contact_duality_positivity");
    need_verdicts(o, r, {"positivity."}, "positivity");
    need_verdicts(o, r, {"duhamel_vs_rk4."}, "rk4");
    for(const char* t: {"0.25", "0.5", "1", "2"}) {
      o.need(tally(r, {std::string("positivity.t=") + t}).checked == 1, std::string("no positivity check at t=") + t);
      o.need(tally(r, {std::string("duhamel_vs_rk4.t=") + t}).checked == 1, std::string("no RK4 check at t=") + t);
    }
  });
  criterion("6 Contact upper bound, both branches", [&](Outcome& o) {
    need_verdicts(o, R("contact_upper_rneg"), {"upper_bound."}, "R<0 preset");
    need_verdicts(o, R("contact_upper_rpos"), {"upper_bound."}, "R>=0 preset");
    o.need(R("contact_upper_rneg").results().at("rates").at("branch") == "R<0", "first preset is not in the R<0 branch");
    o.need(R("contact_upper_rpos").results().at("rates").at("branch") == "R>=0", "second preset is not in the R>=0 branch");
  });
  criterion("7 Contact lower bound", [&](Outcome& o) {
    const auto& r = R("contact_lower");
    need_verdicts(o, r, {"lower_bound."}, "lower_bound");
    o.need(tally(r, {"lower_bound.n="}).checked == 6, "expected 6 (n, t) checks");
  });
  criterion("8 BDLP conditions, relative bounds, duality", [&](Outcome& o) {
    const auto& r = R("bdlp_conditions");
    need_verdicts(o, r, {"hand_arithmetic."}, "hand arithmetic");
    need_verdicts(o, r, {"relative_bound."}, "relative bound");
    need_verdicts(o, r, {"duality."}, "duality");
    need_verdicts(o, r, {"a0_below_half"}, "a0");
    need_verdicts(o, R("bdlp_conditions_violating"), {"hand_arithmetic."}, "hand arithmetic (violating)");
    const auto& bad = R("bdlp_conditions_violating");
    o.need(!bad.pass(), "violating preset unexpectedly passes");
    o.need(bad.results().at("conditions").at("slacks").at("smallbeta").get<double>() < 0.0,
           "violating preset has nonnegative smallness slack");
  });
  criterion("9 Gamma sampler", [&](Outcome& o) {
    need_verdicts(o, R("glauber_sample"), {"gamma."}, "gamma");
    need_runtime(o, wall_seconds(R("glauber_sample")), 60.0, "sampler");
  });
  criterion("10 GNZ identity", [&](Outcome& o) {
    need_verdicts(o, R("glauber_gnz_zero"), {"gnz."}, "zero potential");
    o.need(tally(R("glauber_gnz_zero"), {"gnz."}).checked == 5, "zero-potential battery needs 5 functionals");
    need_verdicts(o, R("glauber_gnz_positive"), {"gnz."}, "positive potential");
    need_runtime(o, wall_seconds(R("glauber_gnz_zero")) + wall_seconds(R("glauber_gnz_positive")), 300.0, "GNZ total");
  });
  criterion("11 Glauber operator suite", [&](Outcome& o) {
    const auto& r = R("glauber_bounds");
    need_verdicts(o, r, {"condition."}, "admissibility");
    need_verdicts(o, r, {"collapse."}, "collapse");
    need_verdicts(o, r, {"duality."}, "duality");
    need_verdicts(o, r, {"relative_bound."}, "relative bound");
    need_verdicts(o, r, {"dirichlet."}, "Dirichlet form");
  });
  criterion("12 Determinism across reruns and thread counts", [&](Outcome& o) {
    drm::set_thread_count(4);
    for(const auto& p: presets) {
      const auto again = run_preset(p);
      o.need(fingerprint(again) == fingerprint(R(p)), p + " differs at 4 threads");
    }
    drm::set_thread_count(1);
    // A same-thread rerun of a cheap preset.
    o.need(fingerprint(run_preset("contact_duality_positivity")) == fingerprint(R("contact_duality_positivity")),
           "contact preset differs on rerun");
  });

  bool all = true;
  for(const auto& [title, o]: lines) {
    all = all && o.pass;
    std::cout << (o.pass ? "PASS  " : "FAIL  ") << title;
    if(!o.detail.empty()) std::cout << "  [" << o.detail << "]";
    std::cout << '\n';
  }
  std::cout << (all ? "all criteria pass" : "some criteria fail") << '\n';
  return all ? 0 : 1;
}
