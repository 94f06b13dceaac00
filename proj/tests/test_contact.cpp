#include "drm/contact.hpp"
#include "drm/harmonic.hpp"
#include "support/contact_oracle.hpp"
#include "support/random_measures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace drm;
using drm::testing::random_measure;

namespace {

GridSpec contact_grid(std::size_t marks = 2, std::size_t space = 4, RepeatedNodes policy = RepeatedNodes::kExclude) {
  GridConfig cfg;
  cfg.mark_lo = 0.2;
  cfg.mark_hi = 3.0;
  cfg.mark_nodes = marks;
  cfg.space_nodes = {space};
  cfg.exclude_repeated_nodes = policy == RepeatedNodes::kExclude;
  return build_grid(cfg);
}

ContactKernels generic_kernels(double m0 = 0.5) {
  ContactKernels k;
  k.m = [m0](double s) { return m0 + 0.2 * s; };
  k.q = [](double sp, double) { return 0.8 * std::exp(-0.5 * sp); };
  k.a = [](const Position& x) { return std::exp(-x[0] * x[0] / (2.0 * 0.09)); };
  return k;
}

ContactKernels no_birth(double m0) {
  ContactKernels k;
  k.m = [m0](double) { return m0; };
  k.q = [](double, double) { return 0.0; };
  k.a = [](const Position&) { return 1.0; };
  return k;
}

HierarchyState product_state(std::size_t V, std::size_t n_max, double rho) {
  HierarchyState s(V, n_max);
  for(std::size_t n = 1; n <= n_max; ++n) s.level(n).setConstant(std::pow(rho, static_cast<double>(n)));
  return s;
}

HierarchyState random_symmetric_state(std::size_t V, std::size_t n_max, std::uint64_t seed) {
  HierarchyState s(V, n_max);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for(std::size_t n = 1; n <= n_max; ++n) {
    for(Eigen::Index i = 0; i < s.level(n).size(); ++i) s.level(n)[i] = u(rng);
    s.level(n) = symmetrize(s.level(n), V, n);
  }
  return s;
}

double rel(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

} // namespace

TEST(ContactRates, NoBirthGivesNegativeMortality) {
  const ContactModel model(no_birth(0.7), contact_grid());
  const auto r = rate_report(model);
  for(double k: r.kappa) EXPECT_EQ(k, 0.0);
  EXPECT_DOUBLE_EQ(r.R, -0.7);
  EXPECT_DOUBLE_EQ(r.mu, 0.7);
}

TEST(ContactRates, KappaIsMarkQuadrature) {
  ContactKernels k;
  k.m = [](double) { return 0.1; };
  k.q = [](double sp, double) { return std::exp(-sp); };
  k.a = [](const Position&) { return 1.0; };
  const auto grid = contact_grid(6, 5);
  const ContactModel model(k, grid);
  double expected = 0.0;
  for(std::size_t j = 0; j < grid.mark_count(); ++j) expected += std::exp(-grid.marks().nodes[j]) * grid.marks().weights[j];
  const auto r = rate_report(model);
  EXPECT_NEAR(r.a_integral, 1.0, 1e-15);
  for(double kap: r.kappa) EXPECT_NEAR(kap, expected, 1e-14);
  // m = kappa gives R = 0.
  k.m = [expected](double) { return expected; };
  EXPECT_NEAR(rate_report(ContactModel(k, grid)).R, 0.0, 1e-14);
}

TEST(ContactOperators, NoBirthOperators) {
  const auto grid = contact_grid();
  const ContactModel model(no_birth(0.4), grid);
  const auto t = tabulate(model);
  const auto op = build_operators(2, t, grid);
  EXPECT_EQ(op.A.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(op.W.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((op.Vop + op.B).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ContactOperators, MAnnihilatesConstantsAndRowSumsAreKappa) {
  const auto grid = contact_grid(3, 4);
  const ContactModel model(generic_kernels(), grid);
  const auto t = tabulate(model);
  const auto rates = rate_report(model);
  for(std::size_t v = 0; v < grid.size(); ++v) {
    EXPECT_NEAR(t.kappa[static_cast<Eigen::Index>(v)], rates.kappa[grid.mark_index(v)], 1e-13);
  }
  for(std::size_t n = 1; n <= 2; ++n) {
    const auto op = build_operators(n, t, grid);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(op.M.rows());
    EXPECT_LE((op.M * one).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LE((op.A * one - op.C * one).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(ContactOperators, DenseMatchesMatrixFreeAndBudget) {
  const auto grid = contact_grid();
  const auto t = tabulate(ContactModel(generic_kernels(), grid));
  const auto op = build_operators(2, t, grid);
  const auto s = random_symmetric_state(grid.size(), 2, 3);
  const Eigen::VectorXd lhs = (op.M + op.Vop) * s.level(2) + op.W * s.level(1);
  const Eigen::VectorXd rhs = apply_slot_sum(t.Q, s.level(2), 2) + apply_insertion(t.birth, s.level(1), 2);
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_THROW(build_operators(5, t, grid), std::length_error);
  EXPECT_THROW(HierarchyState(200, 3), std::length_error);
}

TEST(ContactEvolution, NoRatesIsIdentity) {
  ContactKernels k = no_birth(0.0);
  const auto grid = contact_grid();
  const auto t = tabulate(ContactModel(k, grid));
  const auto k0 = random_symmetric_state(grid.size(), 3, 5);
  const auto kt = evolve_hierarchy(k0, 1.5, 4, t);
  for(std::size_t n = 1; n <= 3; ++n) EXPECT_LE((kt.level(n) - k0.level(n)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_DOUBLE_EQ(kt.t, 1.5);
}

TEST(ContactEvolution, PureDecayClosedForm) {
  const auto grid = contact_grid();
  const auto t = tabulate(ContactModel(no_birth(0.6), grid));
  const auto k0 = random_symmetric_state(grid.size(), 2, 6);
  const auto kt = evolve_hierarchy(k0, 2.0, 3, t);
  EXPECT_LE((kt.level(1) - std::exp(-1.2) * k0.level(1)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((kt.level(2) - std::exp(-2.4) * k0.level(2)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ContactEvolution, MatchesRk4Oracle) {
  const auto grid = contact_grid(2, 4);
  const ContactModel model(generic_kernels(), grid);
  const auto t = tabulate(model);
  const auto k0 = random_symmetric_state(grid.size(), 3, 7);
  const auto kt = evolve_hierarchy(k0, 1.0, 4, t);
  const drm::testing::ContactRk4 rk4(model, 3);
  const auto ref = rk4.integrate(drm::testing::to_levels(k0), 1.0, 1e-4);
  EXPECT_LE(drm::testing::level_distance(kt, ref), 1e-6);
}

TEST(ContactEvolution, SemigroupAndStepIndependence) {
  const auto grid = contact_grid(2, 4);
  const auto t = tabulate(ContactModel(generic_kernels(), grid));
  const auto k0 = random_symmetric_state(grid.size(), 3, 8);
  const auto once = evolve_hierarchy(k0, 1.0, 2, t);
  const auto twice = evolve_hierarchy(evolve_hierarchy(k0, 0.5, 1, t), 0.5, 1, t);
  const auto fine = evolve_hierarchy(k0, 1.0, 8, t);
  for(std::size_t n = 1; n <= 3; ++n) {
    const double scale = max_norm(fine.level(n));
    EXPECT_LE(max_norm(once.level(n) - twice.level(n)) / scale, 1e-13);
    EXPECT_LE(max_norm(once.level(n) - fine.level(n)) / scale, 1e-10);
  }
}

TEST(ContactEvolution, PreservesSymmetryAndPositivity) {
  const auto grid = contact_grid(2, 5);
  const auto t = tabulate(ContactModel(generic_kernels(), grid));
  const auto k0 = random_symmetric_state(grid.size(), 3, 9);
  for(double time: {0.25, 0.5, 1.0, 2.0}) {
    const auto kt = evolve_hierarchy(k0, time, 4, t);
    for(std::size_t n = 2; n <= 3; ++n) EXPECT_LE(asymmetry(kt.level(n), grid.size(), n), 1e-12);
    EXPECT_TRUE(positivity_check(kt).holds);
  }
}

TEST(ContactEvolution, RejectsBadInput) {
  const auto grid = contact_grid();
  const auto t = tabulate(ContactModel(generic_kernels(), grid));
  auto k0 = product_state(grid.size(), 2, 1.0);
  EXPECT_THROW(evolve_hierarchy(k0, 1.0, 0, t), std::invalid_argument);
  k0.level(1)[0] = std::nan("");
  EXPECT_THROW(evolve_hierarchy(k0, 1.0, 1, t), NumericalAbort);
}

TEST(Positivity, NegativeInputFailsAtTimeZero) {
  auto k0 = product_state(8, 2, 1.0);
  EXPECT_TRUE(positivity_check(k0).holds);
  k0.level(2)[3] = -0.5;
  EXPECT_FALSE(positivity_check(k0).holds);
}

TEST(UpperBound, HoldsAtZeroAndForBothBranches) {
  const auto grid = contact_grid(2, 4);
  const double C = 1.0;
  const auto k0 = product_state(grid.size(), 3, 1.0);
  ASSERT_TRUE(upper_bound_hypothesis(k0, C));
  // R >= 0: small mortality.
  {
    const ContactModel model(generic_kernels(0.0), grid);
    const auto rates = rate_report(model);
    ASSERT_GE(rates.R, 0.0);
    ASSERT_LE(rates.sup_qa, 1.0);
    const auto t = tabulate(model);
    EXPECT_TRUE(upper_bound_check(k0, C, rates).holds);
    const auto kt = evolve_hierarchy(k0, 1.0, 4, t);
    const auto rep = upper_bound_check(kt, C, rates);
    EXPECT_EQ(rep.branch, "R>=0");
    for(const auto& b: rep.levels) EXPECT_GE(b.margin, 0.0) << "n=" << b.n;
  }
  // R < 0: large mortality.
  {
    const ContactModel model(generic_kernels(3.0), grid);
    const auto rates = rate_report(model);
    ASSERT_LT(rates.R, 0.0);
    const auto kt = evolve_hierarchy(k0, 2.0, 4, tabulate(model));
    const auto rep = upper_bound_check(kt, C, rates);
    EXPECT_EQ(rep.branch, "R<0");
    for(const auto& b: rep.levels) EXPECT_GE(b.margin, 0.0) << "n=" << b.n;
  }
}

TEST(LowerBound, OneAndTwoLevels) {
  const auto grid = contact_grid(2, 4);
  ContactKernels k;
  k.m = [](double) { return 2.0; };
  k.q = [](double, double) { return 0.6; };
  k.a = [](const Position&) { return 0.9; };
  const ContactModel model(k, grid);
  const auto rates = rate_report(model);
  const auto t = tabulate(model);
  const auto k0 = product_state(grid.size(), 2, 0.8);
  NodeRegion region{Box{Position(0.0), Position(0.5)}, 0.0, 10.0};
  const auto setup = lower_bound_setup(k0, region, t, grid, rates);
  ASSERT_TRUE(setup.admissible) << setup.reason;
  EXPECT_NEAR(setup.alpha, 0.54, 1e-15);
  const auto at0 = lower_bound_check(k0, 1, setup);
  EXPECT_GE(at0.margin, 0.0);
  const auto k1 = evolve_hierarchy(k0, 1.0, 4, t);
  EXPECT_GE(lower_bound_check(k1, 1, setup).margin, 0.0);
  EXPECT_DOUBLE_EQ(harmonic_time(2), 1.0);
  EXPECT_GE(lower_bound_check(k1, 2, setup).margin, 0.0);
}

TEST(LowerBound, RefusesWhenBetaExceedsMu) {
  const auto grid = contact_grid(2, 4);
  ContactKernels k;
  k.m = [](double) { return 0.01; };
  k.q = [](double, double) { return 1.0; };
  k.a = [](const Position&) { return 1.0; };
  const ContactModel model(k, grid);
  const auto k0 = product_state(grid.size(), 2, 1.0);
  const auto setup =
      lower_bound_setup(k0, NodeRegion{Box{Position(0.0), Position(1.0)}, 0.0, 10.0}, tabulate(model), grid, rate_report(model));
  EXPECT_FALSE(setup.admissible);
  EXPECT_THROW(lower_bound_check(k0, 1, setup), std::logic_error);
}

namespace {

// (L F)(eta) for F = K G, evaluated with the generator of the contact model.
double generator_on_k(const CombinatorialFunction& g, AtomSpan eta, const ContactModel& model) {
  const auto& grid = model.grid();
  const FiniteMeasure e = FiniteMeasure::from_span(eta);
  const double F = k_transform(g, e);
  double out = 0.0;
  for(const auto& x: e.atoms()) {
    out += model.death(x.mark) * (k_transform(g, e.without(x.position)) - F);
    for(std::size_t v = 0; v < grid.size(); ++v) {
      out += model.birth(x, grid.node(v)) * (k_transform(g, e.plus(grid.node(v))) - F) * grid.weight(v);
    }
  }
  return out;
}

} // namespace

TEST(HatLContact, TrivialCases) {
  const auto grid = contact_grid();
  const ContactModel model(generic_kernels(), grid);
  const auto g = random_function(3);
  EXPECT_EQ(hat_l_contact(g, AtomSpan{}, model), 0.0);
  const ContactModel decay(no_birth(0.3), grid);
  std::mt19937_64 rng(3);
  const auto eta = random_measure(rng, 3, 0.2, 3.0);
  EXPECT_NEAR(hat_l_contact(g, eta.atoms(), decay), -0.9 * g(eta), 1e-15);
}

TEST(HatLContact, MatchesInverseKOfGeneratorOfK) {
  const auto grid = contact_grid(2, 4);
  const ContactModel model(generic_kernels(), grid);
  std::mt19937_64 rng(4);
  for(int trial = 0; trial < 10; ++trial) {
    const auto g = random_function(500 + trial);
    const auto eta = random_measure(rng, 1 + trial % 3, 0.2, 3.0);
    const double oracle = k_inverse([&](AtomSpan xi) { return generator_on_k(g, xi, model); }, eta.atoms());
    EXPECT_LE(rel(hat_l_contact(g, eta.atoms(), model), oracle), 1e-11);
  }
}

TEST(LTriangleContact, TrivialCases) {
  const auto grid = contact_grid();
  const ContactModel decay(no_birth(0.3), grid);
  const auto k = random_function(4);
  EXPECT_EQ(l_triangle_contact(k, AtomSpan{}, decay), 0.0);
  const FiniteMeasure one{Atom{1.3, Position(0.41)}};
  EXPECT_NEAR(l_triangle_contact(k, one.atoms(), decay), -0.3 * k(one), 1e-15);
}

TEST(LTriangleContact, DualityOnDiscreteLambda) {
  const auto grid = contact_grid(3, 5);
  const ContactModel model(generic_kernels(), grid);
  SupportWindow w{Box{Position(0.0), Position(1.0)}, 0.0, 10.0, 3, 1.0};
  for(std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto g = random_function(seed, -1.0, 1.0, w);
    const auto k = random_function(seed + 100, -1.0, 1.0);
    const double lhs = lp_integrate([&](AtomSpan e) { return hat_l_contact(g, e, model) * k(e); }, grid, 8).value;
    const double rhs = lp_integrate([&](AtomSpan e) { return g(e) * l_triangle_contact(k, e, model); }, grid, 8).value;
    EXPECT_LE(rel(lhs, rhs), 1e-9) << lhs << " vs " << rhs;
  }
}
