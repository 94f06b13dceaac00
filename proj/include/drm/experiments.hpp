#ifndef DRM_EXPERIMENTS_HPP
#define DRM_EXPERIMENTS_HPP

// Experiment runners behind the command-line driver. Each takes a parsed JSON
// config (unknown keys rejected) and fills a RunReport.

#include "drm/bdlp.hpp"
#include "drm/contact.hpp"
#include "drm/glauber.hpp"
#include "drm/harmonic.hpp"
#include "drm/io.hpp"
#include "drm/kernels.hpp"
#include "drm/parallel.hpp"
#include "drm/report.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace drm {

inline const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> names{"identities",     "contact",      "bdlp-conditions", "bdlp-run",
                                              "glauber-sample", "glauber-gnz", "glauber-bounds"};
  return names;
}

namespace experiments {

// |a - b| / (1 + |b|): values of random test functions can sit near zero.
inline double mixed_error(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

// |a - b| / max(|a|, |b|), zero when both vanish.
inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline double max_of(const std::vector<double>& x) {
  double m = 0.0;
  for(double v: x) m = std::max(m, v);
  return m;
}

inline std::string label(const std::string& prefix, double t) { return prefix + "=" + format_number(t); }

// n atoms with marks uniform in [a, b] and positions uniform in the box.
inline FiniteMeasure uniform_measure(std::mt19937_64& rng, std::size_t n, double a, double b, const Box& box) {
  std::vector<Atom> atoms;
  while(atoms.size() < n) {
    const Atom x{a + (b - a) * uniform01(rng), uniform_position(box, rng)};
    bool clash = false;
    for(const auto& y: atoms) clash = clash || y.position == x.position;
    if(!clash) atoms.push_back(x);
  }
  return FiniteMeasure(std::move(atoms));
}

inline SupportWindow grid_window(const GridSpec& grid, std::size_t atoms) {
  return SupportWindow{grid.space().box, grid.marks().a, grid.marks().b, atoms, 1.0};
}

inline std::vector<double> nondecreasing_times(ConfigObject& o, const char* key) {
  auto t = o.get<std::vector<double>>(key);
  if(t.empty()) throw ConfigError(o.path(key) + ": need at least one time");
  for(std::size_t i = 0; i < t.size(); ++i) {
    if(!(t[i] >= 0.0) || (i > 0 && t[i] < t[i - 1])) throw ConfigError(o.path(key) + ": times must be >= 0 and nondecreasing");
  }
  return t;
}

inline std::size_t steps_for(double t, double per_unit) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t * per_unit - 1e-9)));
}

// ---------------------------------------------------------------------------
// Shared config pieces.

inline ContactKernels contact_kernels_from_json(const json& j, const std::string& path) {
  ConfigObject o(j, path);
  ContactKernels k;
  k.m = mark_kernel_from_json(o.at("m"), o.path("m"));
  k.q = mark_pair_kernel_from_json(o.at("q"), o.path("q"));
  k.a = spatial_kernel_from_json(o.at("a"), o.path("a"));
  o.finish();
  return k;
}

inline BdlpKernels bdlp_kernels_from_json(const json& j, const std::string& path) {
  ConfigObject o(j, path);
  BdlpKernels k;
  k.m = mark_kernel_from_json(o.at("m"), o.path("m"));
  k.q_plus = mark_pair_kernel_from_json(o.at("q_plus"), o.path("q_plus"));
  k.q_minus = mark_pair_kernel_from_json(o.at("q_minus"), o.path("q_minus"));
  k.a_plus = spatial_kernel_from_json(o.at("a_plus"), o.path("a_plus"));
  k.a_minus = spatial_kernel_from_json(o.at("a_minus"), o.path("a_minus"));
  o.finish();
  return k;
}

// {"form": "product", "density": c, "mark_decay": r}: k^(n)(v) = prod c e^{-r s_i}
// {"form": "random", "lo", "hi", "scale"}: symmetrized entries uniform in [lo, hi] times scale^n
inline HierarchyState initial_state_from_json(const json& j, const std::string& path, const GridSpec& grid,
                                              std::size_t n_max, std::uint64_t seed) {
  ConfigObject o(j, path);
  const auto form = o.get<std::string>("form");
  HierarchyState s(grid.size(), n_max);
  if(form == "product") {
    const double c = o.get<double>("density");
    const double r = o.get_or<double>("mark_decay", 0.0);
    for(std::size_t n = 1; n <= n_max; ++n) {
      fill_level(s, n, [&](const std::vector<std::size_t>& v) {
        double p = 1.0;
        for(auto d: v) p *= c * std::exp(-r * grid.node(d).mark);
        return p;
      });
    }
  } else if(form == "random") {
    const double lo = o.get<double>("lo");
    const double hi = o.get<double>("hi");
    const double scale = o.get_or<double>("scale", 1.0);
    if(!(hi >= lo)) throw ConfigError(o.path("hi") + ": need hi >= lo");
    std::mt19937_64 rng(derive_seed(seed, 0xC0FFEE));
    for(std::size_t n = 1; n <= n_max; ++n) {
      auto& x = s.level(n);
      const double f = std::pow(scale, static_cast<double>(n));
      for(Eigen::Index i = 0; i < x.size(); ++i) x[i] = f * (lo + (hi - lo) * uniform01(rng));
      x = symmetrize(x, grid.size(), n);
    }
  } else {
    throw ConfigError(o.path("form") + ": unknown initial state form '" + form + "'");
  }
  o.finish();
  return s;
}

inline GibbsParams gibbs_params_from(ConfigObject& o, std::uint64_t seed) {
  GibbsParams p;
  p.theta = o.get<double>("theta");
  p.box = box_from_json(o.at("box"), o.path("box"));
  p.eps = o.get_or<double>("eps", 1e-4);
  p.seed = seed;
  if(!(p.theta > 0.0)) throw ConfigError(o.path("theta") + ": must be > 0");
  if(!(p.eps > 0.0 && p.eps < 1.0)) throw ConfigError(o.path("eps") + ": must lie in (0, 1)");
  return p;
}

struct McmcConfig {
  McmcOptions options;
  double delta = 0.0;
};

inline McmcConfig mcmc_from_json(const json& j, const std::string& path, std::size_t n_samples) {
  ConfigObject o(j, path);
  McmcConfig c;
  c.options.n_samples = n_samples;
  c.options.n_chains = o.get_or<std::size_t>("chains", 16);
  c.options.burn_in_sweeps = o.get_or<std::size_t>("burn_in", 200);
  c.options.thin_sweeps = o.get_or<std::size_t>("thin", 1);
  c.options.moves_per_sweep = o.get_or<std::size_t>("moves_per_sweep", 0);
  c.delta = o.get_or<double>("delta", 0.0);
  o.finish();
  if(c.options.n_chains == 0 || c.options.thin_sweeps == 0) throw ConfigError(path + ": chains and thin must be >= 1");
  return c;
}

// Mark grid on [eps, upper] with nu_theta weights, midpoint space grid on the box.
inline GridSpec quadrature_grid(const json* j, const std::string& path, const GibbsParams& p) {
  GridConfig cfg;
  cfg.mark_lo = p.eps;
  cfg.mark_hi = TruncatedMarkLaw::kUpper;
  cfg.theta = p.theta;
  cfg.mark_nodes = 32;
  cfg.box = p.box;
  cfg.space_nodes.assign(p.box.dim(), 32);
  cfg.exclude_repeated_nodes = false;
  if(j) {
    ConfigObject o(*j, path);
    cfg.mark_nodes = o.get_or<std::size_t>("mark_nodes", cfg.mark_nodes);
    const auto sn = o.get_or<std::size_t>("space_nodes", 32);
    cfg.space_nodes.assign(p.box.dim(), sn);
    o.finish();
  }
  return build_grid(cfg);
}

inline json glauber_sample_summary(const McSample& s) {
  double atoms = 0.0;
  double mass = 0.0;
  for(const auto& m: s.measures) {
    atoms += static_cast<double>(m.support_size());
    mass += m.mass();
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, s.measures.size()));
  return {{"source", s.source}, {"samples", s.measures.size()}, {"mean_atoms", atoms / n}, {"mean_mass", mass / n}};
}

inline McSample draw_samples(RunReport& r, const GibbsParams& p, const RadialPotential& phi, std::size_t n,
                             const json* mcmc, const std::string& path, const std::string& table_prefix) {
  if(phi.form == "zero") return sample_gamma_measure(p, n);
  if(!mcmc) throw ConfigError(path + ": a non-zero potential needs an 'mcmc' block");
  const auto mc = mcmc_from_json(*mcmc, path, n);
  const GibbsTarget target(phi, p);
  GibbsRun run;
  try {
    run = sample_gibbs_mcmc(target, mc.options, p.box.dim(), mc.delta);
  } catch(const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  auto& t = r.table(table_prefix + "chains",
                    {"chain", "birth_rate", "death_rate", "mark_rate", "mean_atoms", "autocorrelation_time"});
  for(const auto& c: run.chains) {
    auto rate = [&](int k) {
      return c.proposed[k] ? static_cast<double>(c.accepted[k]) / static_cast<double>(c.proposed[k]) : 0.0;
    };
    t.add({c.chain, rate(0), rate(1), rate(2), c.mean_count, c.autocorrelation_time});
  }
  return run.sample;
}

// ---------------------------------------------------------------------------
// identities

inline void k_calculus_section(RunReport& r, const json& j, std::uint64_t seed) {
  SectionTimer timer(r, "k_calculus");
  ConfigObject o(j, "k_calculus");
  const auto samples = o.get_or<std::size_t>("samples", 200);
  const auto max_atoms = o.get_or<std::size_t>("max_atoms", 10);
  const auto window = o.get_or<std::vector<double>>("mark_window", {0.1, 3.0});
  const Box box = o.has("box") ? box_from_json(o.at("box"), o.path("box")) : Box{Position(0.0), Position(1.0)};
  const double tol = o.get_or<double>("tolerance", 1e-12);
  const double star_tol = o.get_or<double>("star_tolerance", 1e-11);
  o.finish();
  if(max_atoms > 14) throw ConfigError("k_calculus.max_atoms: at most 14");
  if(window.size() != 2 || !(window[1] > window[0])) throw ConfigError("k_calculus.mark_window: expected [a, b]");

  std::vector<std::array<double, 5>> rows(samples);
  std::vector<std::size_t> sizes(samples);
  parallel_blocks(samples, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    const std::size_t n = i % (max_atoms + 1);
    const auto eta = uniform_measure(rng, n, window[0], window[1], box);
    const auto g = random_function(derive_seed(seed, 1000 + i));
    const auto g2 = random_function(derive_seed(seed, 2000 + i));
    const auto f = random_marked_function(derive_seed(seed, 3000 + i), -1.0, 2.0);
    const double gv = g(eta);
    const double a = mixed_error(k_inverse(k_transform_function(g), eta), gv);
    const double b = mixed_error(k_transform(k_inverse_function(g), eta), gv);
    const double kk = k_transform(g, eta) * k_transform(g2, eta);
    const double c = mixed_error(k_transform([&](AtomSpan x) { return star_convolution(g, g2, x); }, eta), kk);
    double prod = 1.0;
    double abs_prod = 1.0;
    for(const auto& x: eta.atoms()) {
      const double fx = f(x.mark, x.position);
      prod *= 1.0 + fx;
      abs_prod *= 1.0 + std::abs(fx);
    }
    const double err = std::abs(k_transform(lp_exponent_function(f), eta) - prod);
    const double nd = static_cast<double>(n);
    // Summation of 2^n products of n factors, plus the reference product.
    const double bound = (2.0 * nd + std::ldexp(1.0, static_cast<int>(n))) * 0x1.0p-53 * abs_prod;
    rows[i] = {a, b, c, err, bound};
    sizes[i] = n;
  });
  auto& t = r.table("k_calculus", {"sample", "atoms", "k_inverse_of_k", "k_of_k_inverse", "star_product",
                                   "exponent_error", "exponent_roundoff_bound"});
  std::vector<double> col[4];
  for(std::size_t i = 0; i < samples; ++i) {
    t.add({i, sizes[i], rows[i][0], rows[i][1], rows[i][2], rows[i][3], rows[i][4]});
    col[0].push_back(rows[i][0]);
    col[1].push_back(rows[i][1]);
    col[2].push_back(rows[i][2]);
    col[3].push_back(rows[i][4] > 0.0 ? rows[i][3] / rows[i][4] : rows[i][3]);
  }
  const std::string mixed = "max |a - b| / (1 + |b|) over samples";
  r.check("k_calculus.k_inverse_of_k", max_of(col[0]), "<=", tol, mixed);
  r.check("k_calculus.k_of_k_inverse", max_of(col[1]), "<=", tol, mixed);
  r.check("k_calculus.star_multiplicative", max_of(col[2]), "<=", star_tol, mixed);
  r.check("k_calculus.exponent_product", max_of(col[3]), "<=", 1.0, "max error / floating-point roundoff bound");
  r.results()["k_calculus"] = {{"samples", samples}, {"max_atoms", max_atoms}};
}

inline void minlos_section(RunReport& r, const json& j, std::uint64_t seed) {
  SectionTimer timer(r, "minlos");
  ConfigObject o(j, "minlos");
  const auto grid = grid_from_json(o.at("grid"), "minlos.grid");
  const auto n_max = o.get_or<std::size_t>("n_max", 12);
  const auto samples = o.get_or<std::size_t>("samples", 50);
  const double max_mass = o.get_or<double>("max_grid_mass", 2.0);
  const double tol = o.get_or<double>("tolerance", 1e-10);
  o.finish();
  r.check("minlos.grid_mass", grid.total_mass(), "<=", max_mass);
  auto& t = r.table("minlos", {"sample", "part", "lhs", "rhs", "relative"});
  std::vector<double> worst(2, 0.0);
  for(std::size_t i = 0; i < samples; ++i) {
    const auto g = random_function(derive_seed(seed, 10000 + i));
    const auto h = random_pair_function(derive_seed(seed, 11000 + i));
    const auto f = random_marked_function(derive_seed(seed, 12000 + i), -1.0, 1.0);
    const auto r1 = minlos_check_1(g, h, grid, n_max);
    const auto r2 = minlos_check_2([&](AtomSpan e, double s, const Position& x) { return g(e) * f(s, x); }, grid, n_max);
    t.add({i, 1, r1.lhs, r1.rhs, r1.relative()});
    t.add({i, 2, r2.lhs, r2.rhs, r2.relative()});
    worst[0] = std::max(worst[0], r1.relative());
    worst[1] = std::max(worst[1], r2.relative());
  }
  r.check("minlos.part1", worst[0], "<=", tol, "max relative residual");
  r.check("minlos.part2", worst[1], "<=", tol, "max relative residual");
  r.results()["minlos"] = {{"grid_mass", grid.total_mass()}, {"n_max", n_max}, {"samples", samples},
                           {"nodes", grid.size()}, {"policy", grid.excludes_repeated() ? "exclude" : "include"}};
}

inline void lp_exponential_section(RunReport& r, const json& j, std::uint64_t seed) {
  SectionTimer timer(r, "lp_exponential");
  ConfigObject o(j, "lp_exponential");
  const auto grid = grid_from_json(o.at("grid"), "lp_exponential.grid");
  const auto n_max = o.get_or<std::size_t>("n_max", 24);
  const auto samples = o.get_or<std::size_t>("samples", 20);
  const auto range = o.get_or<std::vector<double>>("f_range", {-1.0, 1.0});
  const double tol = o.get_or<double>("tolerance", 1e-10);
  o.finish();
  if(range.size() != 2) throw ConfigError("lp_exponential.f_range: expected [lo, hi]");
  const bool exclude = grid.excludes_repeated();
  auto& t = r.table("lp_exponential", {"sample", "lhs", "reference", "relative", "truncation_tail_bound"});
  double worst = 0.0;
  double worst_tail = 0.0;
  for(std::size_t i = 0; i < samples; ++i) {
    const auto f = random_marked_function(derive_seed(seed, 13000 + i), range[0], range[1]);
    const double lhs = lp_integrate(lp_exponent_function(f), grid, n_max).value;
    double ref = 0.0;
    double abs_mass = 0.0;
    if(exclude) {
      // One atom per position at most: prod_i (1 + sum_j f W).
      std::vector<double> col(grid.space_count(), 0.0);
      for(std::size_t v = 0; v < grid.size(); ++v) {
        col[grid.space_index(v)] += f(grid.node(v).mark, grid.node(v).position) * grid.weight(v);
      }
      ref = 1.0;
      for(double c: col) ref *= 1.0 + c;
    } else {
      for(std::size_t v = 0; v < grid.size(); ++v) ref += f(grid.node(v).mark, grid.node(v).position) * grid.weight(v);
      ref = std::exp(ref);
    }
    for(std::size_t v = 0; v < grid.size(); ++v) {
      abs_mass += std::abs(f(grid.node(v).mark, grid.node(v).position)) * grid.weight(v);
    }
    // sum_{n > n_max} M^n / n!
    double term = 1.0;
    for(std::size_t n = 1; n <= n_max; ++n) term *= abs_mass / static_cast<double>(n);
    double tail = 0.0;
    for(std::size_t n = n_max + 1; n < n_max + 200; ++n) {
      term *= abs_mass / static_cast<double>(n);
      tail += term;
    }
    const double rel = relative_error(lhs, ref);
    t.add({i, lhs, ref, rel, exclude ? 0.0 : tail});
    worst = std::max(worst, rel);
    worst_tail = std::max(worst_tail, exclude ? 0.0 : tail);
  }
  r.check("lp_exponential.relative", worst, "<=", tol, exclude ? "reference prod_i (1 + sum_j f W)" : "reference exp(sum f W)");
  r.results()["lp_exponential"] = {{"grid_mass", grid.total_mass()}, {"n_max", n_max},
                                   {"reference", exclude ? "product" : "exp"}, {"max_truncation_tail", worst_tail}};
}

inline void run_identities(RunReport& r, ConfigObject& o, std::uint64_t seed) {
  bool any = false;
  if(o.has("k_calculus")) {
    k_calculus_section(r, o.at("k_calculus"), seed);
    any = true;
  }
  if(o.has("minlos")) {
    minlos_section(r, o.at("minlos"), seed);
    any = true;
  }
  if(o.has("lp_exponential")) {
    lp_exponential_section(r, o.at("lp_exponential"), seed);
    any = true;
  }
  if(!any) throw ConfigError("identities: need at least one of k_calculus, minlos, lp_exponential");
}

// ---------------------------------------------------------------------------
// contact

inline void run_contact(RunReport& r, ConfigObject& o, std::uint64_t seed) {
  const auto grid = grid_from_json(o.at("grid"));
  const ContactModel model(contact_kernels_from_json(o.at("kernels"), "kernels"), grid);
  const auto rates = rate_report(model);
  const auto tables = tabulate(model);
  r.results()["rates"] = {{"R", rates.R}, {"mu", rates.mu}, {"a_integral", rates.a_integral}, {"sup_qa", rates.sup_qa},
                          {"branch", rates.R < 0.0 ? "R<0" : "R>=0"}};
  auto& rt = r.table("rates", {"mark", "kappa", "m", "r"});
  for(std::size_t j = 0; j < rates.marks.size(); ++j) rt.add({rates.marks[j], rates.kappa[j], rates.m[j], rates.r[j]});

  if(o.has("duality")) {
    SectionTimer timer(r, "duality");
    ConfigObject d(o.at("duality"), "duality");
    const auto samples = d.get_or<std::size_t>("samples", 30);
    const auto n_max = d.get_or<std::size_t>("n_max", 8);
    const auto atoms = d.get_or<std::size_t>("window_atoms", 3);
    const double tol = d.get_or<double>("tolerance", 1e-9);
    d.finish();
    auto& t = r.table("duality", {"sample", "lhs", "rhs", "relative"});
    double worst = 0.0;
    for(std::size_t i = 0; i < samples; ++i) {
      const auto g = random_function(derive_seed(seed, 20000 + i), -1.0, 1.0, grid_window(grid, atoms));
      const auto k = random_function(derive_seed(seed, 21000 + i));
      const double lhs = lp_integrate([&](AtomSpan e) { return hat_l_contact(g, e, model) * k(e); }, grid, n_max).value;
      const double rhs = lp_integrate(
                             [&](AtomSpan e) {
                               const double gv = g(e);
                               return gv == 0.0 ? 0.0 : gv * l_triangle_contact(k, e, model);
                             },
                             grid, n_max)
                             .value;
      const double rel = relative_error(lhs, rhs);
      t.add({i, lhs, rhs, rel});
      worst = std::max(worst, rel);
    }
    r.check("duality.relative", worst, "<=", tol, "max over samples");
  }

  std::optional<HierarchyState> k0;
  std::vector<HierarchyState> states;
  double panels = 8.0;
  std::optional<ContactEvolver> evolver;
  if(o.has("evolution")) {
    SectionTimer timer(r, "evolution");
    ConfigObject e(o.at("evolution"), "evolution");
    const auto n_max = e.get_or<std::size_t>("n_max", 3);
    const auto times = nondecreasing_times(e, "times");
    panels = e.get_or<double>("panels_per_unit", 8.0);
    const double pos_tol = e.get_or<double>("positivity_tolerance", 1e-9);
    k0 = initial_state_from_json(e.at("initial"), "evolution.initial", grid, n_max, seed);
    std::optional<std::pair<double, double>> rk4;
    if(e.has("rk4")) {
      ConfigObject q(e.at("rk4"), "evolution.rk4");
      rk4 = std::make_pair(q.get_or<double>("dt", 1e-4), q.get_or<double>("tolerance", 1e-6));
      q.finish();
    }
    e.finish();
    if(!(panels > 0.0)) throw ConfigError("evolution.panels_per_unit: must be > 0");
    evolver.emplace(tables);
    const auto p0 = positivity_check(*k0, pos_tol);
    r.check("positivity.initial", p0.min_entry, ">=", -p0.tolerance, "k_0 >= 0");
    auto& t = r.table("evolution", {"t", "n", "max_abs", "min_entry", "asymmetry"});
    for(double time: times) {
      auto s = evolver->evolve(*k0, time, steps_for(time, panels));
      const auto p = positivity_check(s, pos_tol);
      r.check(label("positivity.t", time), p.min_entry, ">=", -p.tolerance, "min entry against -tol * max entry");
      for(std::size_t n = 1; n <= n_max; ++n) {
        t.add({time, n, max_norm(s.level(n)), s.level(n).minCoeff(), asymmetry(s.level(n), grid.size(), n)});
      }
      states.push_back(std::move(s));
    }
    if(rk4) {
      SectionTimer rk_timer(r, "rk4_reference");
      const auto ref = rk4_hierarchy(*k0, times, rk4->first, tables);
      auto& rt4 = r.table("rk4_comparison", {"t", "relative_distance"});
      for(std::size_t i = 0; i < times.size(); ++i) {
        const double dist = relative_level_distance(states[i], ref[i]);
        rt4.add({times[i], dist});
        r.check(label("duhamel_vs_rk4.t", times[i]), dist, "<=", rk4->second, "dt = " + format_number(rk4->first));
      }
    }
  }

  if(o.has("upper_bound")) {
    if(!k0) throw ConfigError("upper_bound: needs an 'evolution' block");
    ConfigObject u(o.at("upper_bound"), "upper_bound");
    const double C = u.get<double>("C");
    u.finish();
    const bool hyp = upper_bound_hypothesis(*k0, C);
    r.require("upper_bound.hypothesis", hyp, "||k_0^(n)|| <= C^n n!");
    auto& t = r.table("upper_bound", {"t", "n", "observed", "bound", "margin", "branch"});
    for(const auto& s: states) {
      const auto ub = upper_bound_check(s, C, rates, hyp);
      for(const auto& b: ub.levels) {
        t.add({b.t, b.n, b.observed, b.bound, b.margin, ub.branch});
        r.check("upper_bound.n=" + std::to_string(b.n) + "," + label("t", b.t), b.observed, "<=", b.bound, ub.branch);
      }
    }
  }

  if(o.has("lower_bound")) {
    SectionTimer timer(r, "lower_bound");
    if(!k0) throw ConfigError("lower_bound: needs an 'evolution' block");
    ConfigObject l(o.at("lower_bound"), "lower_bound");
    ConfigObject reg(l.at("region"), "lower_bound.region");
    NodeRegion region;
    region.box = box_from_json(reg.at("box"), reg.path("box"));
    const auto mw = reg.get<std::vector<double>>("mark_window");
    reg.finish();
    if(mw.size() != 2) throw ConfigError("lower_bound.region.mark_window: expected [a, b]");
    region.mark_lo = mw[0];
    region.mark_hi = mw[1];
    const auto levels = l.get_or<std::vector<std::size_t>>("levels", {1, 2});
    const auto offsets = l.get_or<std::vector<double>>("offsets", {0.0, 0.5, 1.0});
    l.finish();
    const auto setup = lower_bound_setup(*k0, region, tables, grid, rates);
    r.results()["lower_bound"] = {{"alpha", setup.alpha}, {"beta", setup.beta}, {"mu", setup.mu},
                                  {"region_nodes", setup.nodes.size()}, {"region_mass", setup.mass}};
    r.check("lower_bound.alpha", setup.alpha, ">", 0.0);
    r.check("lower_bound.beta_below_mu", setup.beta, "<", setup.mu);
    if(setup.admissible) {
      auto& t = r.table("lower_bound", {"n", "t", "observed", "bound", "margin"});
      for(auto n: levels) {
        if(n < 1 || n > k0->n_max()) throw ConfigError("lower_bound.levels: level outside 1..n_max");
        for(double off: offsets) {
          const double time = harmonic_time(n) + off;
          const auto s = evolver->evolve(*k0, time, steps_for(time, panels));
          const auto b = lower_bound_check(s, n, setup);
          t.add({n, time, b.observed, b.bound, b.margin});
          r.check("lower_bound.n=" + std::to_string(n) + "," + label("t", time), b.observed, ">=", b.bound);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// bdlp

inline void run_bdlp_conditions(RunReport& r, ConfigObject& o, std::uint64_t seed) {
  const auto grid = grid_from_json(o.at("grid"));
  BdlpModel model = [&] {
    try {
      return BdlpModel(bdlp_kernels_from_json(o.at("kernels"), "kernels"), grid);
    } catch(const std::invalid_argument& e) {
      throw ConfigError(std::string("kernels: ") + e.what());
    }
  }();
  const WeightedNormParams p{o.get<double>("alpha"), o.get<double>("C")};
  const double beta = o.get<double>("beta");
  const auto cr = condition_check(model, p, beta);
  json conds = json::object();
  for(const auto& c: cr.conditions) {
    r.check("condition." + c.name, c.worst_slack, c.strict ? ">" : ">=", 0.0, "worst slack over grid");
    conds[c.name] = c.worst_slack;
  }
  r.results()["conditions"] = {{"alpha", p.alpha},          {"C", p.C},       {"beta", beta},
                               {"kappa_plus", cr.kappa_plus}, {"kappa_minus", cr.kappa_minus},
                               {"a0", cr.a0},                {"slacks", conds}};
  const bool small = cr.get("smallbeta").holds;
  r.check("a0_below_half", cr.a0, "<", 0.5, small ? "implied by the smallness condition" : "smallness condition fails",
          small);

  if(o.has("expected")) {
    ConfigObject e(o.at("expected"), "expected");
    const double tol = e.get_or<double>("tolerance", 1e-12);
    for(const auto& c: cr.conditions) {
      if(!e.has(c.name)) continue;
      const double want = e.get<double>(c.name);
      r.check("hand_arithmetic." + c.name, std::abs(c.worst_slack - want), "<=", tol * (1.0 + std::abs(want)),
              "expected " + format_number(want));
    }
    for(const auto& [key, value]: std::vector<std::pair<std::string, double>>{
            {"kappa_plus", cr.kappa_plus}, {"kappa_minus", cr.kappa_minus}, {"a0", cr.a0}}) {
      if(!e.has(key)) continue;
      const double want = e.get<double>(key);
      r.check("hand_arithmetic." + key, std::abs(value - want), "<=", tol * (1.0 + std::abs(want)),
              "expected " + format_number(want));
    }
    e.finish();
  }

  if(o.has("relative_bound")) {
    SectionTimer timer(r, "relative_bound");
    ConfigObject rb(o.at("relative_bound"), "relative_bound");
    const auto samples = rb.get_or<std::size_t>("samples", 50);
    const auto n_max = rb.get_or<std::size_t>("n_max", grid.space_count());
    const auto atoms = rb.get_or<std::size_t>("window_atoms", 3);
    rb.finish();
    std::vector<CombinatorialFunction> gs;
    for(std::size_t i = 0; i < samples; ++i) {
      gs.push_back(random_function(derive_seed(seed, 30000 + i), -1.0, 1.0, grid_window(grid, atoms)));
    }
    const auto rep = relative_bound_estimate(gs, model, p, beta, n_max);
    auto& t = r.table("relative_bound", {"sample", "norm_L0", "norm_L1", "norm_L2", "norm_L3", "ratio_1", "ratio_2",
                                         "ratio_3", "skipped"});
    for(const auto& s: rep.samples) {
      t.add({s.index, s.norms[0], s.norms[1], s.norms[2], s.norms[3], s.ratios[0], s.ratios[1], s.ratios[2], s.skipped});
    }
    const char* names[] = {"beta_kappa_minus_C", "kappa_plus_beta", "beta_over_C"};
    for(int k = 0; k < 3; ++k) {
      r.check(std::string("relative_bound.") + names[k], rep.max_ratio[k], "<=", rep.bounds[k] + rep.slack,
              cr.holds ? "max ratio over samples" : "conditions fail: reported only", cr.holds);
    }
    r.results()["relative_bound"] = {{"samples", samples}, {"skipped", rep.skipped}, {"n_max", n_max}};
  }

  if(o.has("duality")) {
    SectionTimer timer(r, "duality");
    ConfigObject d(o.at("duality"), "duality");
    const auto samples = d.get_or<std::size_t>("samples", 4);
    const auto n_max = d.get_or<std::size_t>("n_max", 8);
    const auto atoms = d.get_or<std::size_t>("window_atoms", 3);
    const double tol = d.get_or<double>("tolerance", 1e-9);
    d.finish();
    auto& t = r.table("duality", {"sample", "lhs", "rhs", "relative"});
    double worst = 0.0;
    for(std::size_t i = 0; i < samples; ++i) {
      const auto g = random_function(derive_seed(seed, 31000 + i), -1.0, 1.0, grid_window(grid, atoms));
      const auto k = random_function(derive_seed(seed, 32000 + i));
      const double lhs = lp_integrate([&](AtomSpan e) { return hat_l_bdlp(g, e, model) * k(e); }, grid, n_max).value;
      const double rhs = lp_integrate(
                             [&](AtomSpan e) {
                               const double gv = g(e);
                               return gv == 0.0 ? 0.0 : gv * l_triangle_bdlp(k, e, model);
                             },
                             grid, n_max)
                             .value;
      const double rel = relative_error(lhs, rhs);
      t.add({i, lhs, rhs, rel});
      worst = std::max(worst, rel);
    }
    r.check("duality.relative", worst, "<=", tol, "max over samples");
  }
}

inline void run_bdlp_run(RunReport& r, ConfigObject& o, std::uint64_t seed) {
  const auto grid = grid_from_json(o.at("grid"));
  BdlpModel model = [&] {
    try {
      return BdlpModel(bdlp_kernels_from_json(o.at("kernels"), "kernels"), grid);
    } catch(const std::invalid_argument& e) {
      throw ConfigError(std::string("kernels: ") + e.what());
    }
  }();
  const WeightedNormParams p{o.get<double>("alpha"), o.get<double>("C")};
  const auto n_max = o.get_or<std::size_t>("n_max", 2);
  Closure closure;
  try {
    closure = closure_from_string(o.get_or<std::string>("closure", "zero"));
  } catch(const std::invalid_argument& e) {
    throw ConfigError(std::string("closure: ") + e.what());
  }
  const auto times = nondecreasing_times(o, "times");
  const double per_unit = o.get_or<double>("steps_per_unit", 64.0);
  const double sym_tol = o.get_or<double>("symmetry_tolerance", 1e-12);
  const bool richardson = o.get_or<bool>("richardson", false);
  const auto k0 = initial_state_from_json(o.at("initial"), "initial", grid, n_max, seed);
  const BdlpHierarchy h(tabulate(model), n_max, closure);

  SectionTimer timer(r, "evolution");
  std::vector<HierarchyState> traj{k0};
  HierarchyState cur = k0;
  for(double t: times) {
    const double dt = t - cur.t;
    if(dt > 0.0) cur = h.evolve(cur, dt, steps_for(dt, per_unit));
    traj.push_back(cur);
  }
  auto& t = r.table("trajectory", {"t", "n", "max_abs", "asymmetry", "subpoisson_ratio"});
  double worst_asym = 0.0;
  for(const auto& s: traj) {
    const double ratio = subpoisson_ratio(s, grid, p);
    for(std::size_t n = 1; n <= n_max; ++n) {
      const double a = asymmetry(s.level(n), grid.size(), n);
      worst_asym = std::max(worst_asym, a);
      t.add({s.t, n, max_norm(s.level(n)), a, ratio});
    }
  }
  r.check("symmetry", worst_asym, "<=", sym_tol, "max relative asymmetry over the trajectory");
  const auto fit = subpoisson_fit(traj, grid, p);
  double max_log = 0.0;
  for(double x: fit.ratios) max_log = std::max(max_log, x > 0.0 ? std::abs(std::log(x)) : 0.0);
  r.check("subpoisson.max_positive_residual", fit.max_positive_residual, "<=", 0.05 * max_log,
          "soft gate: 0.05 max |log r|", false);
  r.results()["subpoisson_fit"] = {{"A", fit.A}, {"B", fit.B}, {"max_positive_residual", fit.max_positive_residual},
                                   {"A_envelope", fit.A_envelope}};
  r.results()["hierarchy"] = {{"n_max", n_max}, {"closure", to_string(closure)}, {"steps_per_unit", per_unit},
                              {"kappa_plus", model.kappa_plus()}, {"kappa_minus", model.kappa_minus()}};
  if(richardson) {
    const double T = times.back();
    const auto s1 = steps_for(T, per_unit);
    const auto a = h.evolve(k0, T, s1);
    const auto b = h.evolve(k0, T, 2 * s1);
    const auto c = h.evolve(k0, T, 4 * s1);
    double e1 = 0.0;
    double e2 = 0.0;
    for(std::size_t n = 1; n <= n_max; ++n) {
      e1 = std::max(e1, max_norm(a.level(n) - b.level(n)));
      e2 = std::max(e2, max_norm(b.level(n) - c.level(n)));
    }
    const double order = (e1 > 0.0 && e2 > 0.0) ? std::log2(e1 / e2) : 0.0;
    r.results()["richardson"] = {{"steps", s1}, {"diff_h", e1}, {"diff_h2", e2}, {"observed_order", order}};
  }
}

// ---------------------------------------------------------------------------
// glauber

inline void run_glauber_sample(RunReport& r, ConfigObject& o, std::uint64_t seed) {
  const auto p = gibbs_params_from(o, seed);
  const auto n = o.get<std::size_t>("samples");
  const double k_se = o.get_or<double>("tolerance_se", 3.0);
  if(n < 2) throw ConfigError("samples: need at least 2");
  {
    SectionTimer timer(r, "gamma");
    const auto s = sample_gamma_measure(p, n);
    const auto c = gamma_mass_check(s, p);
    const double k = c.expected;
    r.check("gamma.mean", std::abs(c.mean - k), "<=", k_se * c.mean_se, "|mean - theta sigma| against k SE");
    r.check("gamma.variance", std::abs(c.variance - k), "<=", k_se * c.variance_se, "|var - theta sigma| against k SE");
    r.check("gamma.ks", c.ks_statistic, "<", c.ks_critical, "Kolmogorov-Smirnov, 1% level");
    const TruncatedMarkLaw law(p.eps);
    r.results()["gamma"] = {{"expected", k},
                            {"mean", c.mean},
                            {"mean_se", c.mean_se},
                            {"variance", c.variance},
                            {"variance_se", c.variance_se},
                            {"ks_statistic", c.ks_statistic},
                            {"ks_critical", c.ks_critical},
                            {"mean_atoms_expected", p.theta * law.mass() * p.box.volume()},
                            {"mass_bias", k * (1.0 - std::exp(-p.eps))},
                            {"summary", glauber_sample_summary(s)}};
    std::vector<double> m;
    for(const auto& x: s.measures) m.push_back(x.mass());
    std::sort(m.begin(), m.end());
    auto& t = r.table("mass_quantiles", {"p", "empirical", "gamma"});
    for(double q: {0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99}) {
      const auto idx = std::min(m.size() - 1, static_cast<std::size_t>(q * static_cast<double>(m.size())));
      t.add({q, m[idx], boost::math::gamma_p_inv(k, q)});
    }
  }
  if(o.has("gibbs")) {
    SectionTimer timer(r, "gibbs");
    ConfigObject g(o.at("gibbs"), "gibbs");
    const auto phi = potential_from_json(g.at("potential"), "gibbs.potential");
    const auto gn = g.get_or<std::size_t>("samples", n);
    const auto checks = g.get_or<std::size_t>("detailed_balance_checks", 100);
    McmcConfig mc;
    {
      json rest = json::object();
      for(const char* key: {"chains", "burn_in", "thin", "moves_per_sweep", "delta"}) {
        if(g.has(key)) rest[key] = g.at(key);
      }
      mc = mcmc_from_json(rest, "gibbs", gn);
    }
    g.finish();
    const GibbsTarget target(phi, p);
    GibbsRun run;
    try {
      run = sample_gibbs_mcmc(target, mc.options, p.box.dim(), mc.delta);
    } catch(const std::invalid_argument& e) {
      throw ConfigError(std::string("gibbs: ") + e.what());
    }
    auto& t = r.table("chains", {"chain", "birth_rate", "death_rate", "mark_rate", "mean_atoms", "autocorrelation_time"});
    for(const auto& c: run.chains) {
      auto rate = [&](int k) {
        return c.proposed[k] ? static_cast<double>(c.accepted[k]) / static_cast<double>(c.proposed[k]) : 0.0;
      };
      t.add({c.chain, rate(0), rate(1), rate(2), c.mean_count, c.autocorrelation_time});
    }
    // Detailed balance on random states and moves.
    std::mt19937_64 rng(derive_seed(seed, 0xDB));
    const double M = target.reference_mass();
    double worst = 0.0;
    for(std::size_t i = 0; i < checks; ++i) {
      const auto eta = uniform_measure(rng, i % 6, p.eps, 4.0, p.box);
      const Atom x{target.mark_law().sample(rng), uniform_position(p.box, rng)};
      const auto big = eta.plus(x);
      std::size_t idx = 0;
      while(!(big.atoms()[idx].position == x.position)) ++idx;
      const double fwd = target.density(eta.atoms()) * (GibbsTarget::kBirth / M) * std::min(1.0, target.birth_ratio(eta.atoms(), x));
      const double bwd = target.density(big.atoms()) * (GibbsTarget::kDeath / static_cast<double>(big.support_size())) *
                         std::min(1.0, target.death_ratio(big.atoms(), idx));
      worst = std::max(worst, relative_error(fwd, bwd));
      std::vector<Atom> moved(big.atoms().begin(), big.atoms().end());
      moved[idx].mark = target.mark_law().sample(rng);
      const double mf = target.density(big.atoms()) * std::min(1.0, target.mark_ratio(big.atoms(), idx, moved[idx].mark));
      const double mb = target.density(moved) * std::min(1.0, target.mark_ratio(moved, idx, x.mark));
      worst = std::max(worst, relative_error(mf, mb));
    }
    r.check("gibbs.detailed_balance", worst, "<=", 1e-12, "max relative imbalance over random moves");
    const TruncatedMarkLaw law(p.eps);
    r.results()["gibbs"] = {{"summary", glauber_sample_summary(run.sample)},
                            {"gamma_mean_atoms", p.theta * law.mass() * p.box.volume()},
                            {"gamma_mean_mass", p.theta * p.box.volume()}};
  }
}

using NamedFunctional = std::pair<std::string, PointFunctional>;

inline NamedFunctional functional_from_json(const json& j, const std::string& path, const Box& box) {
  ConfigObject o(j, path);
  const auto name = o.get<std::string>("name");
  NamedFunctional f;
  f.first = name;
  if(name == "zero") {
    f.second = [](const Position&, AtomSpan) { return 0.0; };
  } else if(name == "indicator") {
    f.second = [box](const Position& x, AtomSpan) { return box.contains(x) ? 1.0 : 0.0; };
  } else if(name == "left_half") {
    const double mid = 0.5 * (box.lo[0] + box.hi[0]);
    f.second = [mid](const Position& x, AtomSpan) { return x[0] < mid ? 1.0 : 0.0; };
  } else if(name == "exp_mass") {
    f.second = [](const Position&, AtomSpan e) {
      double m = 0.0;
      for(const auto& a: e) m += a.mark;
      return std::exp(-m);
    };
  } else if(name == "coordinate_exp_mass") {
    f.second = [](const Position& x, AtomSpan e) {
      double m = 0.0;
      for(const auto& a: e) m += a.mark;
      return x[0] * std::exp(-m);
    };
  } else if(name == "local_mass") {
    const double radius = detail::positive(o, "radius");
    f.first += "(r=" + format_number(radius) + ")";
    f.second = [radius](const Position& x, AtomSpan e) {
      double m = 0.0;
      for(const auto& a: e) {
        if(distance(a.position, x) < radius) m += a.mark;
      }
      return m;
    };
  } else {
    throw ConfigError(o.path("name") + ": unknown functional '" + name + "'");
  }
  o.finish();
  return f;
}

inline void run_glauber_gnz(RunReport& r, ConfigObject& o, std::uint64_t seed) {
  const auto p = gibbs_params_from(o, seed);
  const auto n = o.get<std::size_t>("samples");
  const auto phi = potential_from_json(o.at("potential"), "potential");
  const double k_se = o.get_or<double>("tolerance_se", 3.0);
  const auto batches = o.get_or<std::size_t>("batches", kDefaultBatches);
  std::vector<NamedFunctional> fs;
  for(std::size_t i = 0; i < o.at("functionals").size(); ++i) {
    fs.push_back(functional_from_json(o.at("functionals")[i], "functionals[" + std::to_string(i) + "]", p.box));
  }
  if(fs.empty()) throw ConfigError("functionals: need at least one");
  const auto grid = quadrature_grid(o.has("quadrature") ? &o.at("quadrature") : nullptr, "quadrature", p);
  McSample s;
  {
    SectionTimer timer(r, "sampling");
    s = draw_samples(r, p, phi, n, o.has("mcmc") ? &o.at("mcmc") : nullptr, "mcmc", "");
  }
  SectionTimer timer(r, "gnz");
  auto& t = r.table("gnz", {"functional", "lhs", "rhs", "difference", "se", "se_lhs", "se_rhs"});
  for(const auto& [name, F]: fs) {
    const auto e = gnz_residual(F, s, phi, grid, batches);
    t.add({name, e.lhs, e.rhs, e.difference(), e.se, e.se_lhs, e.se_rhs});
    r.check("gnz." + name, std::abs(e.difference()), "<=", k_se * e.se, "|lhs - rhs| against k paired batch-means SE");
  }
  r.results()["samples"] = glauber_sample_summary(s);
  r.results()["quadrature"] = {{"mark_nodes", grid.mark_count()}, {"space_nodes", grid.space_count()},
                               {"mark_window", {grid.marks().a, grid.marks().b}}};
}

inline void run_glauber_bounds(RunReport& r, ConfigObject& o, std::uint64_t seed) {
  const auto grid = grid_from_json(o.at("grid"));
  const auto phi = potential_from_json(o.at("potential"), "potential");
  const double alpha = o.get<double>("alpha");
  const double C = o.get<double>("C");
  if(!(grid.marks().theta > 0.0)) throw ConfigError("grid: marks must carry nu_theta weights (no nu_table)");
  const GlauberModel model(phi, grid);
  const auto cond = glauber_condition_check(phi, model.theta(), alpha, C, grid);
  r.require("condition.parameters", cond.params_ok, "C > 2 and alpha in (0, 1)");
  r.require("condition.positive", cond.positive, "phi >= 0");
  r.check("condition.smallparam", cond.slack, ">=", 0.0, "alpha (1 - alpha) / (2C) - theta sup int phi");
  r.results()["condition"] = {{"theta", cond.theta}, {"sup_integral", cond.sup_integral}, {"lhs", cond.lhs},
                              {"rhs", cond.rhs}, {"slack", cond.slack}};

  if(o.has("collapse")) {
    SectionTimer timer(r, "collapse");
    ConfigObject c(o.at("collapse"), "collapse");
    const auto samples = c.get_or<std::size_t>("samples", 20);
    const auto atoms = c.get_or<std::size_t>("max_atoms", 3);
    const double tol = c.get_or<double>("tolerance", 1e-12);
    c.finish();
    const GlauberModel free_model(zero_potential(), grid);
    double worst_hat = 0.0;
    double worst_tri = 0.0;
    for(std::size_t i = 0; i < samples; ++i) {
      std::mt19937_64 rng(derive_seed(seed, 40000 + i));
      const auto eta = uniform_measure(rng, i % (atoms + 1), grid.marks().a, grid.marks().b, grid.space().box);
      const auto g = random_function(derive_seed(seed, 41000 + i));
      double hat = -eta.mass() * g(eta);
      for_each_free_node(grid, eta.atoms(), [&](const Atom& x, double w) { hat += x.mark * g(eta.plus(x)) * w; });
      double tri = -eta.mass() * g(eta);
      for(const auto& x: eta.atoms()) tri += x.mark * g(eta.without(x.position));
      worst_hat = std::max(worst_hat, mixed_error(hat_l_glauber(g, eta.atoms(), free_model), hat));
      worst_tri = std::max(worst_tri, mixed_error(l_triangle_glauber(g, eta.atoms(), free_model, 6), tri));
    }
    r.check("collapse.hat_l", worst_hat, "<=", tol, "zero potential, max |a - b| / (1 + |b|)");
    r.check("collapse.l_triangle", worst_tri, "<=", tol, "zero potential, max |a - b| / (1 + |b|)");
  }

  if(o.has("duality")) {
    SectionTimer timer(r, "duality");
    ConfigObject d(o.at("duality"), "duality");
    const auto samples = d.get_or<std::size_t>("samples", 4);
    const auto n_max = d.get_or<std::size_t>("n_max", 6);
    const auto atoms = d.get_or<std::size_t>("window_atoms", 3);
    const double tol = d.get_or<double>("tolerance", 1e-8);
    d.finish();
    auto& t = r.table("duality", {"sample", "lhs", "rhs", "relative"});
    double worst = 0.0;
    for(std::size_t i = 0; i < samples; ++i) {
      const auto g = random_function(derive_seed(seed, 42000 + i), -1.0, 1.0, grid_window(grid, atoms));
      const auto k = random_function(derive_seed(seed, 43000 + i));
      const double lhs = lp_integrate([&](AtomSpan e) { return hat_l_glauber(g, e, model) * k(e); }, grid, n_max).value;
      const double rhs = lp_integrate(
                             [&](AtomSpan e) {
                               const double gv = g(e);
                               return gv == 0.0 ? 0.0 : gv * l_triangle_glauber(k, e, model, n_max);
                             },
                             grid, n_max)
                             .value;
      const double rel = relative_error(lhs, rhs);
      t.add({i, lhs, rhs, rel});
      worst = std::max(worst, rel);
    }
    r.check("duality.relative", worst, "<=", tol, "max over samples");
  }

  if(o.has("relative_bound")) {
    SectionTimer timer(r, "relative_bound");
    ConfigObject rb(o.at("relative_bound"), "relative_bound");
    const auto samples = rb.get_or<std::size_t>("samples", 30);
    const auto n_max = rb.get_or<std::size_t>("n_max", grid.space_count());
    const auto atoms = rb.get_or<std::size_t>("window_atoms", 3);
    rb.finish();
    std::vector<CombinatorialFunction> gs;
    for(std::size_t i = 0; i < samples; ++i) {
      gs.push_back(random_function(derive_seed(seed, 44000 + i), -1.0, 1.0, grid_window(grid, atoms)));
    }
    const auto rep = relative_bound_glauber(gs, model, alpha, C, n_max);
    auto& t = r.table("relative_bound", {"sample", "norm_L0", "norm_L1", "ratio"});
    for(std::size_t i = 0; i < samples; ++i) t.add({i, rep.norms[i][0], rep.norms[i][1], rep.ratios[i]});
    r.check("relative_bound.max_ratio", rep.max_ratio, "<=", rep.bound + rep.slack,
            cond.holds ? "max ||L1 G|| / ||L0 G|| against 1/C" : "conditions fail: reported only", cond.holds);
    r.results()["relative_bound"] = {{"samples", samples}, {"skipped", rep.skipped}, {"n_max", n_max},
                                     {"max_ratio", rep.max_ratio}, {"bound", rep.bound}};
  }

  if(o.has("dirichlet")) {
    ConfigObject d(o.at("dirichlet"), "dirichlet");
    const auto p = gibbs_params_from(d, seed);
    const auto n = d.get<std::size_t>("samples");
    const double k_se = d.get_or<double>("tolerance_se", 3.0);
    const auto batches = d.get_or<std::size_t>("batches", kDefaultBatches);
    const auto dphi = d.has("potential") ? potential_from_json(d.at("potential"), "dirichlet.potential") : zero_potential();
    const auto qgrid = quadrature_grid(d.has("quadrature") ? &d.at("quadrature") : nullptr, "dirichlet.quadrature", p);
    McSample s;
    {
      SectionTimer timer(r, "dirichlet_sampling");
      s = draw_samples(r, p, dphi, n, d.has("mcmc") ? &d.at("mcmc") : nullptr, "dirichlet.mcmc", "dirichlet_");
    }
    d.finish();
    SectionTimer timer(r, "dirichlet");
    const double mid = 0.5 * (p.box.lo[0] + p.box.hi[0]);
    const auto F = [](AtomSpan e) {
      double m = 0.0;
      for(const auto& a: e) m += a.mark;
      return std::exp(-m);
    };
    const auto G = [mid](AtomSpan e) {
      double m = 0.0;
      for(const auto& a: e) {
        if(a.position[0] < mid) m += a.mark;
      }
      return std::exp(-m);
    };
    const auto e = dirichlet_residual(F, G, s, dphi, qgrid, batches);
    r.table("dirichlet", {"lhs", "rhs", "difference", "se"}).add({e.lhs, e.rhs, e.difference(), e.se});
    r.check("dirichlet.residual", std::abs(e.difference()), "<=", k_se * e.se,
            "F = exp(-eta(box)), G = exp(-eta(left half)); paired batch-means SE");
    r.results()["dirichlet"] = {{"samples", glauber_sample_summary(s)}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"se", e.se}};
  }
}

} // namespace experiments

// Runs one experiment. Throws ConfigError on invalid configs and
// NumericalAbort on non-finite intermediate results.
inline RunReport run_experiment(const std::string& command, const json& config,
                                std::optional<std::uint64_t> seed_override = std::nullopt) {
  ConfigObject o(config, "config");
  if(o.has("command") && o.get<std::string>("command") != command) {
    throw ConfigError("config.command: '" + config.at("command").get<std::string>() + "' does not match '" + command + "'");
  }
  const auto config_seed = o.get_or<std::uint64_t>("seed", 1);
  const std::uint64_t seed = seed_override ? *seed_override : config_seed;
  o.get_or<std::string>("description", "");
  RunReport r(command, config, seed);
  try {
    if(command == "identities") experiments::run_identities(r, o, seed);
    else if(command == "contact") experiments::run_contact(r, o, seed);
    else if(command == "bdlp-conditions") experiments::run_bdlp_conditions(r, o, seed);
    else if(command == "bdlp-run") experiments::run_bdlp_run(r, o, seed);
    else if(command == "glauber-sample") experiments::run_glauber_sample(r, o, seed);
    else if(command == "glauber-gnz") experiments::run_glauber_gnz(r, o, seed);
    else if(command == "glauber-bounds") experiments::run_glauber_bounds(r, o, seed);
    else throw ConfigError("unknown command '" + command + "'");
  } catch(const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch(const std::length_error& e) {
    throw ConfigError(e.what());
  } catch(const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  o.finish();
  r.stop();
  return r;
}

} // namespace drm

#endif // DRM_EXPERIMENTS_HPP
