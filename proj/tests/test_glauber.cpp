#include "drm/glauber.hpp"
#include "drm/harmonic.hpp"
#include "support/random_measures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace drm;
using drm::testing::random_measure;

namespace {

RadialPotential step(double h, double r) {
  RadialPotential p;
  p.form = "step";
  p.range = r;
  p.profile = [h](double) { return h; };
  return p;
}

RadialPotential bump(double h, double r) {
  RadialPotential p;
  p.form = "bump";
  p.range = r;
  p.profile = [h, r](double x) {
    const double u = 1.0 - (x / r) * (x / r);
    return h * u * u;
  };
  return p;
}

RadialPotential step_with_tail(double h, double r, double depth, double tail) {
  RadialPotential p;
  p.form = "step_with_tail";
  p.range = tail;
  p.profile = [h, r, depth](double x) { return x <= r ? h : -depth; };
  return p;
}

GridSpec small_grid(std::size_t marks = 2, std::size_t space = 4, double theta = 1.0) {
  GridConfig cfg;
  cfg.mark_lo = 0.2;
  cfg.mark_hi = 3.0;
  cfg.theta = theta;
  cfg.mark_nodes = marks;
  cfg.space_nodes = {space};
  return build_grid(cfg);
}

// Quadrature grid for the Monte Carlo identities on [0, 1].
GridSpec mc_grid(double theta, double eps) {
  GridConfig cfg;
  cfg.mark_lo = eps;
  cfg.mark_hi = TruncatedMarkLaw::kUpper;
  cfg.theta = theta;
  cfg.mark_nodes = 48;
  cfg.space_nodes = {64};
  cfg.exclude_repeated_nodes = false;
  return build_grid(cfg);
}

double rel(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

double mass_in(AtomSpan eta, double lo, double hi) {
  double m = 0.0;
  for(const auto& a: eta) {
    if(a.position[0] >= lo && a.position[0] < hi) m += a.mark;
  }
  return m;
}

SupportWindow window3() { return SupportWindow{Box{Position(0.0), Position(1.0)}, 0.0, 10.0, 3, 1.0}; }

// Within the smallness condition for alpha = 0.5, C = 2.5 on small_grid.
constexpr double kAlpha = 0.5;
constexpr double kC = 2.5;

} // namespace

TEST(GlauberEnergy, HandValues) {
  const auto phi = step(0.5, 0.3);
  const FiniteMeasure eta({Atom{1.0, Position(0.1)}, Atom{2.0, Position(0.3)}, Atom{4.0, Position(0.9)}});
  // Only the first two atoms interact.
  EXPECT_DOUBLE_EQ(pair_energy(eta.atoms(), phi), 2.0 * 1.0 * 2.0 * 0.5);
  EXPECT_DOUBLE_EQ(phi_energy(3.0, Position(0.2), eta.atoms(), phi), 2.0 * 3.0 * (1.0 + 2.0) * 0.5);
  const FiniteMeasure bigger = eta.plus(Atom{3.0, Position(0.2)});
  EXPECT_NEAR(pair_energy(bigger.atoms(), phi) - pair_energy(eta.atoms(), phi),
              phi_energy(3.0, Position(0.2), eta.atoms(), phi), 1e-14);
  EXPECT_DOUBLE_EQ(total_mass(eta), 7.0);
  EXPECT_DOUBLE_EQ(f_aux(1.0, Position(0.1), zero_potential())(2.0, Position(0.15)), 0.0);
  EXPECT_NEAR(f_aux(1.0, Position(0.1), phi)(2.0, Position(0.15)), std::exp(-2.0) - 1.0, 1e-15);
}

TEST(PotentialCondition, ConstantsAndOutcomes) {
  EXPECT_NEAR(unit_ball_volume(1), 2.0, 1e-15);
  EXPECT_NEAR(unit_ball_volume(2), std::numbers::pi, 1e-15);
  EXPECT_NEAR(unit_ball_volume(3), 4.0 * std::numbers::pi / 3.0, 1e-14);

  const auto pos = potential_condition_check(step(1.0, 0.2), 1, 0.1);
  EXPECT_TRUE(pos.holds);
  EXPECT_DOUBLE_EQ(pos.sup_negative, 0.0);
  EXPECT_NEAR(pos.c, 1.0 + 0.2 / 0.1, 1e-15);

  // d = 1, delta = 0.1, R = 0.3: c = 4, 2 b_1 c = 16. Depth 0.05 passes, 0.07 fails.
  const auto ok = potential_condition_check(step_with_tail(1.0, 0.1, 0.05, 0.3), 1, 0.1);
  EXPECT_NEAR(ok.rhs, 16.0 * 0.05, 1e-14);
  EXPECT_NEAR(ok.slack, 1.0 - 0.8, 1e-14);
  EXPECT_TRUE(ok.holds);
  EXPECT_FALSE(potential_condition_check(step_with_tail(1.0, 0.1, 0.07, 0.3), 1, 0.1).holds);
  // d = 2: c = sqrt(2) 4, 2 pi c^2 depth.
  const auto d2 = potential_condition_check(step_with_tail(1.0, 0.1, 0.005, 0.3), 2, 0.1);
  EXPECT_NEAR(d2.rhs, 2.0 * std::numbers::pi * 32.0 * 0.005, 1e-12);
  EXPECT_THROW(potential_condition_check(step(1.0, 0.1), 1, 0.0), std::invalid_argument);
}

TEST(TruncatedMarkLaw, InverseCdf) {
  const TruncatedMarkLaw law(1e-4);
  EXPECT_NEAR(law.mass(), exp_integral_e1(1e-4), 0.0);
  // -gamma - ln(eps) + eps - eps^2 / 4
  EXPECT_NEAR(law.mass(), -0.5772156649015329 + 4.0 * std::log(10.0) + 1e-4 - 0.25e-8, 1e-12);
  for(double u: {1e-6, 0.01, 0.2, 0.5, 0.9, 0.999, 0.999999}) {
    const double s = law.quantile(u);
    const double cdf = (law.mass() - exp_integral_e1(s)) / law.mass();
    EXPECT_NEAR(cdf, u, 2e-5) << u;
  }
  EXPECT_NEAR(law.quantile(0.0), 1e-4, 1e-15);
  EXPECT_THROW(TruncatedMarkLaw(0.0), std::invalid_argument);
}

TEST(GammaSampler, ThreadCountDoesNotChangeDraws) {
  GibbsParams p;
  p.theta = 2.0;
  p.seed = 17;
  set_thread_count(1);
  const auto a = sample_gamma_measure(p, 300);
  set_thread_count(4);
  const auto b = sample_gamma_measure(p, 300);
  set_thread_count(0);
  ASSERT_EQ(a.measures.size(), b.measures.size());
  for(std::size_t i = 0; i < a.measures.size(); ++i) {
    ASSERT_EQ(a.measures[i].support_size(), b.measures[i].support_size());
    EXPECT_EQ(a.measures[i].mass(), b.measures[i].mass());
  }
}

TEST(GammaSampler, MassIsGammaDistributed) {
  GibbsParams p;
  p.theta = 2.0;
  p.seed = 5;
  const auto s = sample_gamma_measure(p, 20000);
  const auto c = gamma_mass_check(s, p);
  EXPECT_TRUE(c.mean_ok) << c.mean << " +- " << c.mean_se;
  EXPECT_TRUE(c.variance_ok) << c.variance << " +- " << c.variance_se;
  EXPECT_TRUE(c.ks_ok) << c.ks_statistic << " vs " << c.ks_critical;
  double atoms = 0.0;
  for(const auto& m: s.measures) atoms += static_cast<double>(m.support_size());
  EXPECT_NEAR(atoms / 20000.0, 2.0 * exp_integral_e1(1e-4), 0.1);
}

TEST(GammaSampler, KsRejectsWrongShape) {
  GibbsParams p;
  p.theta = 2.0;
  p.seed = 5;
  const auto s = sample_gamma_measure(p, 5000);
  GibbsParams wrong = p;
  wrong.theta = 2.2;
  const auto c = gamma_mass_check(s, wrong);
  EXPECT_FALSE(c.ks_ok);
  EXPECT_FALSE(c.mean_ok);
}

TEST(GibbsTarget, DetailedBalance) {
  GibbsParams p;
  p.theta = 1.5;
  const GibbsTarget target(bump(1.3, 0.4), p);
  const double M = target.reference_mass();
  std::mt19937_64 rng(11);
  for(int trial = 0; trial < 40; ++trial) {
    const auto eta = random_measure(rng, static_cast<std::size_t>(trial % 5), 0.01, 4.0);
    const Atom x{0.05 + 0.1 * trial, Position(0.025 * trial)};
    const auto bigger = eta.plus(x);
    std::size_t idx = 0;
    while(!(bigger.atoms()[idx].position == x.position)) ++idx;
    const double n = static_cast<double>(eta.support_size());
    const double fwd = target.density(eta.atoms()) * (GibbsTarget::kBirth / M) *
                       std::min(1.0, target.birth_ratio(eta.atoms(), x));
    const double bwd = target.density(bigger.atoms()) * (GibbsTarget::kDeath / (n + 1.0)) *
                       std::min(1.0, target.death_ratio(bigger.atoms(), idx));
    EXPECT_LE(rel(fwd, bwd), 1e-12);

    // Mark resampling; proposal densities cancel against the reference.
    const double s_new = 0.3 + 0.05 * trial;
    std::vector<Atom> moved(bigger.atoms().begin(), bigger.atoms().end());
    moved[idx].mark = s_new;
    const double m_fwd = target.density(bigger.atoms()) * std::min(1.0, target.mark_ratio(bigger.atoms(), idx, s_new));
    const double m_bwd = target.density(moved) * std::min(1.0, target.mark_ratio(moved, idx, x.mark));
    EXPECT_LE(rel(m_fwd, m_bwd), 1e-12);
  }
}

TEST(GibbsMcmc, ZeroPotentialReproducesGamma) {
  GibbsParams p;
  p.theta = 2.0;
  p.seed = 3;
  const GibbsTarget target(zero_potential(), p);
  McmcOptions opt;
  opt.n_samples = 4000;
  opt.thin_sweeps = 2;
  const auto run = sample_gibbs_mcmc(target, opt);
  const auto c = gamma_mass_check(run.sample, p);
  EXPECT_LE(std::abs(c.mean - 2.0), 0.15);
  EXPECT_LE(std::abs(c.variance - 2.0), 0.4);
  ASSERT_EQ(run.chains.size(), 16U);
  for(const auto& ch: run.chains) {
    EXPECT_GT(ch.accepted[0], 0U);
    EXPECT_GE(ch.autocorrelation_time, 1.0);
  }
}

TEST(GibbsMcmc, DeterministicAcrossThreadsAndRejectsUnstable) {
  GibbsParams p;
  p.seed = 8;
  const GibbsTarget target(bump(1.0, 0.2), p);
  McmcOptions opt;
  opt.n_samples = 200;
  opt.burn_in_sweeps = 20;
  set_thread_count(1);
  const auto a = sample_gibbs_mcmc(target, opt);
  set_thread_count(3);
  const auto b = sample_gibbs_mcmc(target, opt);
  set_thread_count(0);
  for(std::size_t i = 0; i < 200; ++i) EXPECT_EQ(a.sample.measures[i].mass(), b.sample.measures[i].mass());
  const GibbsTarget unstable(step_with_tail(1.0, 0.1, 0.5, 0.3), p);
  EXPECT_THROW(sample_gibbs_mcmc(unstable, opt, 1, 0.1), std::invalid_argument);
}

TEST(GibbsMcmc, RepulsionLowersAtomCount) {
  GibbsParams p;
  p.theta = 2.0;
  p.seed = 12;
  McmcOptions opt;
  opt.n_samples = 3000;
  const auto gamma = sample_gibbs_mcmc(GibbsTarget(zero_potential(), p), opt);
  const auto repulsive = sample_gibbs_mcmc(GibbsTarget(step(20.0, 0.3), p), opt);
  auto counts = [](const McSample& s) {
    std::vector<double> n;
    for(const auto& m: s.measures) n.push_back(static_cast<double>(m.support_size()));
    return n;
  };
  const auto a = counts(gamma.sample);
  const auto b = counts(repulsive.sample);
  const double se = std::hypot(detail::batch_se(a, 100), detail::batch_se(b, 100));
  EXPECT_LT(detail::mean_of(b) + 3.0 * se, detail::mean_of(a));
}

TEST(Gnz, TrivialFunctionals) {
  GibbsParams p;
  p.seed = 14;
  const auto s = sample_gamma_measure(p, 500);
  const auto grid = mc_grid(1.0, p.eps);
  const auto zero = gnz_residual([](const Position&, AtomSpan) { return 0.0; }, s, zero_potential(), grid);
  EXPECT_EQ(zero.lhs, 0.0);
  EXPECT_EQ(zero.rhs, 0.0);
  EXPECT_EQ(zero.se, 0.0);
  // A constant F makes both sides of the Dirichlet form vanish.
  const auto F = [](AtomSpan) { return 2.5; };
  const auto G = [](AtomSpan e) { return std::exp(-mass_in(e, 0.0, 0.5)); };
  const auto d = dirichlet_residual(F, G, s, zero_potential(), grid);
  EXPECT_NEAR(d.lhs, 0.0, 1e-12);
  EXPECT_NEAR(d.rhs, 0.0, 1e-12);
}

TEST(Gnz, ZeroPotentialOnGammaSamples) {
  GibbsParams p;
  p.theta = 2.0;
  p.seed = 21;
  const auto s = sample_gamma_measure(p, 8000);
  const auto grid = mc_grid(2.0, p.eps);
  const auto phi = zero_potential();
  const std::vector<PointFunctional> fs{
      [](const Position&, AtomSpan) { return 1.0; },
      [](const Position& x, AtomSpan) { return x[0] < 0.5 ? 1.0 : 0.0; },
      [](const Position&, AtomSpan e) { return std::exp(-mass_in(e, 0.0, 1.0)); },
      [](const Position& x, AtomSpan e) { return x[0] * std::exp(-mass_in(e, 0.0, 1.0)); },
      [](const Position& x, AtomSpan e) { return mass_in(e, x[0] - 0.2, x[0] + 0.2); },
  };
  for(std::size_t i = 0; i < fs.size(); ++i) {
    const auto r = gnz_residual(fs[i], s, phi, grid);
    EXPECT_TRUE(r.within(3.0)) << i << ": " << r.lhs << " vs " << r.rhs << " se " << r.se;
    EXPECT_GT(r.se, 0.0);
  }
}

TEST(Gnz, PositivePotentialOnGibbsSamples) {
  GibbsParams p;
  p.theta = 1.0;
  p.seed = 4;
  const auto phi = bump(2.0, 0.25);
  const GibbsTarget target(phi, p);
  McmcOptions opt;
  opt.n_samples = 4000;
  const auto run = sample_gibbs_mcmc(target, opt);
  const auto grid = mc_grid(1.0, p.eps);
  const PointFunctional F = [](const Position&, AtomSpan e) { return std::exp(-mass_in(e, 0.0, 1.0)); };
  const auto r = gnz_residual(F, run.sample, phi, grid);
  EXPECT_TRUE(r.within(3.0)) << r.lhs << " vs " << r.rhs << " se " << r.se;
  // The same samples violate the interaction-free identity.
  const auto wrong = gnz_residual(F, run.sample, zero_potential(), grid);
  EXPECT_FALSE(wrong.within(5.0)) << wrong.lhs << " vs " << wrong.rhs << " se " << wrong.se;
}

TEST(Dirichlet, SymmetricFormOnSamples) {
  const auto F = [](AtomSpan e) { return std::exp(-mass_in(e, 0.0, 1.0)); };
  const auto G = [](AtomSpan e) { return std::exp(-mass_in(e, 0.0, 0.5)); };
  {
    GibbsParams p;
    p.theta = 2.0;
    p.seed = 31;
    const auto s = sample_gamma_measure(p, 8000);
    const auto r = dirichlet_residual(F, G, s, zero_potential(), mc_grid(2.0, p.eps));
    EXPECT_TRUE(r.within(3.0)) << r.lhs << " vs " << r.rhs << " se " << r.se;
  }
  {
    GibbsParams p;
    p.theta = 1.0;
    p.seed = 32;
    const auto phi = bump(2.0, 0.25);
    McmcOptions opt;
    opt.n_samples = 4000;
    const auto run = sample_gibbs_mcmc(GibbsTarget(phi, p), opt);
    const auto r = dirichlet_residual(F, G, run.sample, phi, mc_grid(1.0, p.eps));
    EXPECT_TRUE(r.within(3.0)) << r.lhs << " vs " << r.rhs << " se " << r.se;
  }
}

TEST(BatchMeans, IndependentDataMatchesNaiveSe) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(100000);
  for(auto& v: x) v = g(rng);
  EXPECT_NEAR(detail::batch_se(x, 100), 1.0 / std::sqrt(100000.0), 0.25 / std::sqrt(100000.0));
}

TEST(HatLGlauber, ZeroPotentialCollapse) {
  const GlauberModel model(zero_potential(), small_grid());
  const auto& grid = model.grid();
  std::mt19937_64 rng(1);
  for(int trial = 0; trial < 8; ++trial) {
    const auto g = random_function(40 + trial);
    const auto eta = random_measure(rng, static_cast<std::size_t>(trial % 4), 0.2, 3.0);
    double expected = -eta.mass() * g(eta);
    for(std::size_t v = 0; v < grid.size(); ++v) expected += grid.node(v).mark * g(eta.plus(grid.node(v))) * grid.weight(v);
    const auto parts = hat_l_glauber_parts(g, eta.atoms(), model);
    EXPECT_LE(std::abs(parts[0] + parts[1] - expected), 1e-12 * (1.0 + std::abs(expected)));
    EXPECT_EQ(parts[0], -eta.mass() * g(eta));
  }
}

namespace {

// (L F)(eta) with F = K G.
double generator_on_k(const CombinatorialFunction& g, const FiniteMeasure& e, const GlauberModel& model) {
  return glauber_generator([&](AtomSpan xi) { return k_transform(g, xi); }, e.atoms(), model.potential(),
                           model.grid());
}

} // namespace

TEST(HatLGlauber, MatchesInverseKOfGeneratorOfK) {
  const GlauberModel model(step(0.8, 0.35), small_grid());
  std::mt19937_64 rng(6);
  for(int trial = 0; trial < 10; ++trial) {
    const auto g = random_function(900 + trial);
    const auto eta = random_measure(rng, 1 + trial % 3, 0.2, 3.0);
    const double oracle =
        k_inverse([&](AtomSpan xi) { return generator_on_k(g, FiniteMeasure::from_span(xi), model); }, eta.atoms());
    EXPECT_LE(rel(hat_l_glauber(g, eta.atoms(), model), oracle), 1e-11);
  }
}

TEST(LTriangleGlauber, ZeroPotentialCollapse) {
  const GlauberModel model(zero_potential(), small_grid());
  const auto k = random_function(3);
  std::mt19937_64 rng(2);
  EXPECT_EQ(l_triangle_glauber(k, AtomSpan{}, model, 4), 0.0);
  for(int trial = 0; trial < 6; ++trial) {
    const auto eta = random_measure(rng, 1 + trial % 3, 0.2, 3.0);
    double expected = -eta.mass() * k(eta);
    for(const auto& x: eta.atoms()) expected += x.mark * k(eta.without(x.position));
    EXPECT_LE(std::abs(l_triangle_glauber(k, eta.atoms(), model, 4) - expected), 1e-12 * (1.0 + std::abs(expected)));
  }
}

TEST(LTriangleGlauber, DualityOnDiscreteLambda) {
  const auto grid = small_grid(2, 4);
  const GlauberModel model(bump(1.5, 0.6), grid);
  for(std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto g = random_function(seed, -1.0, 1.0, window3());
    const auto k = random_function(seed + 50);
    const double lhs = lp_integrate([&](AtomSpan e) { return hat_l_glauber(g, e, model) * k(e); }, grid, 6).value;
    const double rhs = lp_integrate([&](AtomSpan e) { return g(e) * l_triangle_glauber(k, e, model, 6); }, grid, 6).value;
    EXPECT_LE(rel(lhs, rhs), 1e-8) << lhs << " vs " << rhs;
  }
}

TEST(GlauberCondition, HandArithmetic) {
  const auto grid = small_grid(2, 4);
  // Nodes 1/8, 3/8, 5/8, 7/8; radius 0.3 reaches the neighbours only.
  const auto r = glauber_condition_check(step(0.06, 0.3), 1.0, kAlpha, kC, grid);
  EXPECT_NEAR(r.sup_integral, 0.06 * 0.75, 1e-15);
  EXPECT_NEAR(r.rhs, 0.25 / 5.0, 1e-15);
  EXPECT_TRUE(r.holds);
  EXPECT_FALSE(glauber_condition_check(step(0.07, 0.3), 1.0, kAlpha, kC, grid).holds);
  EXPECT_FALSE(glauber_condition_check(step(0.01, 0.3), 1.0, kAlpha, 2.0, grid).params_ok);
  const auto neg = glauber_condition_check(step_with_tail(0.01, 0.1, 0.001, 0.3), 1.0, kAlpha, kC, grid);
  EXPECT_FALSE(neg.positive);
  EXPECT_FALSE(neg.holds);
}

TEST(GlauberRelativeBound, AdmissibleAndNegativeControl) {
  const auto grid = small_grid(2, 4);
  std::vector<CombinatorialFunction> gs;
  for(std::uint64_t seed = 1; seed <= 6; ++seed) gs.push_back(random_function(seed, -1.0, 1.0));
  const GlauberModel ok(step(0.06, 0.3), grid);
  ASSERT_TRUE(glauber_condition_check(ok.potential(), 1.0, kAlpha, kC, grid).holds);
  const auto r = relative_bound_glauber(gs, ok, kAlpha, kC, 4);
  EXPECT_TRUE(r.holds) << r.max_ratio;
  EXPECT_GT(r.max_ratio, 0.0);
  EXPECT_EQ(r.skipped, 0U);

  // An attractive potential drops the positivity hypothesis.
  const GlauberModel attractive(step(-1.0, 0.3), grid);
  ASSERT_FALSE(glauber_condition_check(attractive.potential(), 1.0, kAlpha, kC, grid).holds);
  const auto bad = relative_bound_glauber(gs, attractive, kAlpha, kC, 4);
  EXPECT_FALSE(bad.holds) << bad.max_ratio;
}
