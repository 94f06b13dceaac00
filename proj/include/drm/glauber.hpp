#ifndef DRM_GLAUBER_HPP
#define DRM_GLAUBER_HPP

// Glauber-type dynamics in a Gamma-measure environment on a bounded window:
// Gamma and Gibbs samplers, Monte Carlo checks of the GNZ and Dirichlet-form
// identities, the descendant operator, its dual and the semigroup condition.

#include "drm/bdlp.hpp"
#include "drm/cone.hpp"
#include "drm/discretization.hpp"
#include "drm/kernels.hpp"
#include "drm/parallel.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace drm {

// ---------------------------------------------------------------------------
// Interaction energy.

// Phi((s, x); eta) = 2 s sum_y s_y phi(x, y).
inline double phi_energy(double s, const Position& x, AtomSpan eta, const RadialPotential& phi) {
  if(phi.form == "zero") return 0.0;
  double acc = 0.0;
  for(const auto& a: eta) acc += a.mark * phi(x, a.position);
  return 2.0 * s * acc;
}

// Sum over unordered pairs {x, y}, x != y, of 2 s_x s_y phi(x, y).
inline double pair_energy(AtomSpan eta, const RadialPotential& phi) {
  if(phi.form == "zero") return 0.0;
  double e = 0.0;
  for(std::size_t i = 0; i < eta.size(); ++i) {
    for(std::size_t j = i + 1; j < eta.size(); ++j) e += 2.0 * eta[i].mark * eta[j].mark * phi(eta[i].position, eta[j].position);
  }
  return e;
}

// S(eta) = sum of marks.
inline double total_mass(const FiniteMeasure& eta) { return eta.mass(); }

// f_{s,x}(tau, y) = exp(-2 s tau phi(x, y)) - 1.
inline MarkedFunction f_aux(double s, const Position& x, const RadialPotential& phi) {
  return [s, x, phi](double tau, const Position& y) { return std::exp(-2.0 * s * tau * phi(x, y)) - 1.0; };
}

// ---------------------------------------------------------------------------
// Conditions on the potential.

inline double unit_ball_volume(std::size_t d) {
  const double h = 0.5 * static_cast<double>(d);
  return std::pow(std::numbers::pi, h) / std::tgamma(h + 1.0);
}

namespace detail {
inline constexpr std::size_t kProfileSamples = 20001;

// Samples of phi on [0, r_max], including both ends.
template<typename Fn>
void scan_profile(const RadialPotential& phi, double r_max, Fn&& fn) {
  for(std::size_t i = 0; i < kProfileSamples; ++i) {
    const double r = r_max * static_cast<double>(i) / static_cast<double>(kProfileSamples - 1);
    fn(phi(r));
  }
}
} // namespace detail

inline bool is_nonnegative(const RadialPotential& phi) {
  bool ok = true;
  detail::scan_profile(phi, phi.range, [&](double v) { ok = ok && v >= 0.0; });
  return ok;
}

struct PotentialConditionReport {
  std::size_t d = 1;
  double delta = 0.0;
  double range = 0.0;
  double c = 0.0;
  double b_d = 0.0;
  double inf_near = 0.0;     // inf_{|x-y| <= delta} phi
  double sup_negative = 0.0; // sup |(-phi) v 0|
  double rhs = 0.0;          // 2 b_d c^d sup_negative
  double slack = 0.0;        // inf_near - rhs
  bool holds = false;
};

inline PotentialConditionReport potential_condition_check(const RadialPotential& phi, std::size_t d, double delta) {
  if(d < 1 || d > kMaxDim) throw std::invalid_argument("dimension out of range");
  if(!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  PotentialConditionReport r;
  r.d = d;
  r.delta = delta;
  r.range = phi.range;
  r.b_d = unit_ball_volume(d);
  r.c = std::sqrt(static_cast<double>(d)) * (1.0 + phi.range / delta);
  r.inf_near = HUGE_VAL;
  detail::scan_profile(phi, delta, [&](double v) { r.inf_near = std::min(r.inf_near, v); });
  detail::scan_profile(phi, phi.range, [&](double v) { r.sup_negative = std::max(r.sup_negative, std::max(-v, 0.0)); });
  r.rhs = 2.0 * r.b_d * std::pow(r.c, static_cast<double>(d)) * r.sup_negative;
  r.slack = r.inf_near - r.rhs;
  r.holds = r.slack > 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Samplers.

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// E_1(x) = int_x^inf e^{-t} / t dt.
inline double exp_integral_e1(double x) { return -std::expint(-x); }

// Marks with density proportional to e^{-s}/s on [eps, inf), by a
// 4096-node inverse-CDF table in log s with linear interpolation.
class TruncatedMarkLaw {
public:
  static constexpr std::size_t kTableNodes = 4096;
  static constexpr double kUpper = 40.0; // E_1(40) < 1e-19

  explicit TruncatedMarkLaw(double eps) : eps_(eps) {
    if(!(eps > 0.0) || !(eps < 1.0)) throw std::invalid_argument("mark cutoff eps must lie in (0, 1)");
    mass_ = exp_integral_e1(eps);
    const double lo = std::log(eps);
    const double hi = std::log(kUpper);
    log_s_.resize(kTableNodes);
    cdf_.resize(kTableNodes);
    for(std::size_t k = 0; k < kTableNodes; ++k) {
      log_s_[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(kTableNodes - 1);
      cdf_[k] = k == 0 ? 0.0 : (mass_ - exp_integral_e1(std::exp(log_s_[k]))) / mass_;
    }
    cdf_.back() = 1.0;
  }

  double eps() const noexcept { return eps_; }
  // int_eps^inf e^{-s}/s ds
  double mass() const noexcept { return mass_; }

  double quantile(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if(it == cdf_.begin()) return eps_;
    if(it == cdf_.end()) return kUpper;
    const std::size_t hi = static_cast<std::size_t>(it - cdf_.begin());
    const std::size_t lo = hi - 1;
    const double t = (u - cdf_[lo]) / (cdf_[hi] - cdf_[lo]);
    return std::exp(log_s_[lo] + t * (log_s_[hi] - log_s_[lo]));
  }

  double sample(std::mt19937_64& rng) const { return quantile(uniform01(rng)); }

private:
  double eps_;
  double mass_ = 0.0;
  std::vector<double> log_s_;
  std::vector<double> cdf_;
};

struct GibbsParams {
  double theta = 1.0;
  Box box{Position(0.0), Position(1.0)};
  double eps = 1e-4;
  std::uint64_t seed = 1;
};

inline Position uniform_position(const Box& box, std::mt19937_64& rng) {
  Position p = box.lo;
  for(std::size_t i = 0; i < box.lo.dim(); ++i) p[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * uniform01(rng);
  return p;
}

struct McSample {
  std::vector<FiniteMeasure> measures;
  std::string source; // "gamma" or "gibbs"
};

inline constexpr std::size_t kSampleBlocks = 64;

// Independent draws from the eps-truncated Gamma measure on the box.
inline McSample sample_gamma_measure(const GibbsParams& p, std::size_t n_samples) {
  if(!(p.theta > 0.0)) throw std::invalid_argument("theta must be > 0");
  p.box.validate();
  const TruncatedMarkLaw law(p.eps);
  const double mean_count = p.theta * law.mass() * p.box.volume();
  McSample out;
  out.source = "gamma";
  out.measures.resize(n_samples);
  parallel_blocks(kSampleBlocks, [&](std::size_t b) {
    const std::size_t begin = n_samples * b / kSampleBlocks;
    const std::size_t end = n_samples * (b + 1) / kSampleBlocks;
    std::mt19937_64 rng(derive_seed(p.seed, b));
    std::poisson_distribution<long> count(mean_count);
    for(std::size_t i = begin; i < end; ++i) {
      const long n = count(rng);
      std::vector<Atom> atoms;
      atoms.reserve(static_cast<std::size_t>(n));
      for(long k = 0; k < n; ++k) {
        const double s = law.sample(rng);
        atoms.push_back(Atom{s, uniform_position(p.box, rng)});
      }
      out.measures[i] = FiniteMeasure(std::move(atoms));
    }
  });
  return out;
}

// Target: density exp(-pair_energy) with respect to the Poisson law with
// intensity theta (e^{-s}/s) 1_{s >= eps} ds x Lebesgue on the box.
class GibbsTarget {
public:
  static constexpr double kBirth = 0.4;
  static constexpr double kDeath = 0.4;
  static constexpr double kMark = 0.2;

  GibbsTarget(RadialPotential phi, const GibbsParams& p) : phi_(std::move(phi)), params_(p), law_(p.eps) {
    p.box.validate();
    if(!(p.theta > 0.0)) throw std::invalid_argument("theta must be > 0");
    reference_mass_ = p.theta * law_.mass() * p.box.volume();
  }

  const RadialPotential& potential() const noexcept { return phi_; }
  const GibbsParams& params() const noexcept { return params_; }
  const TruncatedMarkLaw& mark_law() const noexcept { return law_; }
  double reference_mass() const noexcept { return reference_mass_; }

  // Unnormalized density.
  double density(AtomSpan eta) const { return std::exp(-pair_energy(eta, phi_)); }

  // Metropolis-Hastings ratios (acceptance = min(1, ratio)).
  double birth_ratio(AtomSpan eta, const Atom& x) const {
    return std::exp(-phi_energy(x.mark, x.position, eta, phi_)) * reference_mass_ /
           static_cast<double>(eta.size() + 1) * (kDeath / kBirth);
  }
  double death_ratio(AtomSpan eta, std::size_t index) const {
    std::vector<Atom> rest;
    assign_without(rest, eta, index);
    return std::exp(phi_energy(eta[index].mark, eta[index].position, rest, phi_)) *
           static_cast<double>(eta.size()) / reference_mass_ * (kBirth / kDeath);
  }
  double mark_ratio(AtomSpan eta, std::size_t index, double new_mark) const {
    std::vector<Atom> rest;
    assign_without(rest, eta, index);
    const auto& x = eta[index];
    return std::exp(phi_energy(x.mark, x.position, rest, phi_) - phi_energy(new_mark, x.position, rest, phi_));
  }

private:
  RadialPotential phi_;
  GibbsParams params_;
  TruncatedMarkLaw law_;
  double reference_mass_ = 0.0;
};

struct ChainDiagnostics {
  std::size_t chain = 0;
  std::array<std::size_t, 3> proposed{}; // birth, death, mark
  std::array<std::size_t, 3> accepted{};
  double mean_count = 0.0;
  double autocorrelation_time = 0.0; // of the atom count, in recorded samples
};

struct GibbsRun {
  McSample sample;
  std::vector<ChainDiagnostics> chains;
};

struct McmcOptions {
  std::size_t n_samples = 1000;
  std::size_t n_chains = 16;
  std::size_t burn_in_sweeps = 200;
  std::size_t thin_sweeps = 1;
  std::size_t moves_per_sweep = 0; // 0: max(20, 2 * reference mass)
};

// Integrated autocorrelation time with a self-consistent window (c = 5).
inline double autocorrelation_time(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if(n < 4) return 1.0;
  double mean = 0.0;
  for(double v: x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for(double v: x) c0 += (v - mean) * (v - mean);
  if(c0 == 0.0) return 1.0;
  double tau = 1.0;
  for(std::size_t k = 1; k < n / 2; ++k) {
    double ck = 0.0;
    for(std::size_t i = 0; i + k < n; ++i) ck += (x[i] - mean) * (x[i + k] - mean);
    tau += 2.0 * ck / c0;
    if(static_cast<double>(k) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0);
}

// Birth / death / mark-resample Metropolis-Hastings. Requires phi >= 0 or the
// stability condition of potential_condition_check with the given delta.
inline GibbsRun sample_gibbs_mcmc(const GibbsTarget& target, const McmcOptions& opt, std::size_t d = 1,
                                  double delta = 0.0) {
  const auto& phi = target.potential();
  if(!is_nonnegative(phi)) {
    if(!(delta > 0.0) || !potential_condition_check(phi, d, delta).holds) {
      throw std::invalid_argument("potential is neither nonnegative nor stable");
    }
  }
  if(opt.n_chains == 0 || opt.thin_sweeps == 0) throw std::invalid_argument("need chains >= 1 and thin >= 1");
  const std::size_t moves = opt.moves_per_sweep > 0
                                ? opt.moves_per_sweep
                                : std::max<std::size_t>(20, static_cast<std::size_t>(2.0 * target.reference_mass()));
  GibbsRun run;
  run.sample.source = "gibbs";
  run.sample.measures.resize(opt.n_samples);
  run.chains.resize(opt.n_chains);
  const auto& box = target.params().box;
  parallel_blocks(opt.n_chains, [&](std::size_t c) {
    const std::size_t begin = opt.n_samples * c / opt.n_chains;
    const std::size_t end = opt.n_samples * (c + 1) / opt.n_chains;
    std::mt19937_64 rng(derive_seed(target.params().seed, 0x6b1ab5 + c));
    auto& diag = run.chains[c];
    diag.chain = c;
    std::vector<Atom> state;
    std::vector<Atom> next;
    auto move = [&]() {
      const double u = uniform01(rng);
      if(u < GibbsTarget::kBirth) {
        ++diag.proposed[0];
        const Atom x{target.mark_law().sample(rng), uniform_position(box, rng)};
        if(uniform01(rng) < target.birth_ratio(state, x)) {
          assign_with_atom(next, state, x);
          state.swap(next);
          ++diag.accepted[0];
        }
      } else if(u < GibbsTarget::kBirth + GibbsTarget::kDeath) {
        ++diag.proposed[1];
        if(state.empty()) return;
        const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(state.size()));
        if(uniform01(rng) < target.death_ratio(state, i)) {
          state.erase(state.begin() + static_cast<std::ptrdiff_t>(i));
          ++diag.accepted[1];
        }
      } else {
        ++diag.proposed[2];
        if(state.empty()) return;
        const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(state.size()));
        const double s = target.mark_law().sample(rng);
        if(uniform01(rng) < target.mark_ratio(state, i, s)) {
          state[i].mark = s;
          ++diag.accepted[2];
        }
      }
    };
    for(std::size_t sweep = 0; sweep < opt.burn_in_sweeps; ++sweep) {
      for(std::size_t m = 0; m < moves; ++m) move();
    }
    std::vector<double> counts;
    for(std::size_t i = begin; i < end; ++i) {
      for(std::size_t sweep = 0; sweep < opt.thin_sweeps; ++sweep) {
        for(std::size_t m = 0; m < moves; ++m) move();
      }
      run.sample.measures[i] = FiniteMeasure(state);
      counts.push_back(static_cast<double>(state.size()));
    }
    double mean = 0.0;
    for(double v: counts) mean += v;
    diag.mean_count = counts.empty() ? 0.0 : mean / static_cast<double>(counts.size());
    diag.autocorrelation_time = autocorrelation_time(counts);
  });
  return run;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators with batch-means standard errors.

struct PairedEstimate {
  double lhs = 0.0;
  double rhs = 0.0;
  double se = 0.0;     // of the mean paired difference lhs - rhs
  double se_lhs = 0.0; // of lhs alone
  double se_rhs = 0.0;
  std::size_t samples = 0;
  std::size_t batches = 0;

  double difference() const noexcept { return lhs - rhs; }
  // |lhs - rhs| <= k se
  bool within(double k) const noexcept { return std::abs(lhs - rhs) <= k * se; }
};

inline constexpr std::size_t kDefaultBatches = 100;

namespace detail {

inline double mean_of(const std::vector<double>& x) { return x.empty() ? 0.0 : pairwise_sum(x) / static_cast<double>(x.size()); }

// Standard error of the mean of x by non-overlapping batch means.
inline double batch_se(const std::vector<double>& x, std::size_t batches) {
  const std::size_t n = x.size();
  batches = std::min(batches, n);
  if(batches < 2) return 0.0;
  std::vector<double> means(batches);
  for(std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = n * b / batches;
    const std::size_t hi = n * (b + 1) / batches;
    means[b] = pairwise_sum(x.data() + lo, hi - lo) / static_cast<double>(hi - lo);
  }
  const double m = mean_of(means);
  std::vector<double> dev(batches);
  for(std::size_t b = 0; b < batches; ++b) dev[b] = (means[b] - m) * (means[b] - m);
  const double var = pairwise_sum(dev) / static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

inline PairedEstimate paired(const std::vector<double>& l, const std::vector<double>& r, std::size_t batches) {
  PairedEstimate e;
  e.samples = l.size();
  e.batches = std::min(batches, l.size());
  e.lhs = mean_of(l);
  e.rhs = mean_of(r);
  std::vector<double> d(l.size());
  for(std::size_t i = 0; i < l.size(); ++i) d[i] = l[i] - r[i];
  e.se = batch_se(d, batches);
  e.se_lhs = batch_se(l, batches);
  e.se_rhs = batch_se(r, batches);
  return e;
}

template<typename PerSample>
void per_sample(const McSample& s, PerSample&& fn) {
  const std::size_t n = s.measures.size();
  parallel_blocks(kSampleBlocks, [&](std::size_t b) {
    for(std::size_t i = n * b / kSampleBlocks; i < n * (b + 1) / kSampleBlocks; ++i) fn(i, s.measures[i].atoms());
  });
}

} // namespace detail

// F(x, eta): x is an atom position of eta on the left side, an inserted one on the right.
using PointFunctional = std::function<double(const Position&, AtomSpan)>;

// lhs = E sum_x s_x F(x, eta); rhs = E sum_nodes F(x, eta + s delta_x) e^{-Phi((s,x); eta)} s W.
// The grid's mark weights must be nu_theta weights.
inline PairedEstimate gnz_residual(const PointFunctional& F, const McSample& samples, const RadialPotential& phi,
                                   const GridSpec& grid, std::size_t batches = kDefaultBatches) {
  if(!(grid.marks().theta > 0.0)) throw std::invalid_argument("gnz_residual: grid marks must carry nu_theta weights");
  const std::size_t n = samples.measures.size();
  std::vector<double> l(n);
  std::vector<double> r(n);
  detail::per_sample(samples, [&](std::size_t i, AtomSpan eta) {
    double lhs = 0.0;
    for(const auto& a: eta) lhs += a.mark * F(a.position, eta);
    std::vector<Atom> buf;
    double rhs = 0.0;
    for(std::size_t v = 0; v < grid.size(); ++v) {
      const Atom& node = grid.node(v);
      assign_with_atom(buf, eta, node);
      rhs += F(node.position, buf) * std::exp(-phi_energy(node.mark, node.position, eta, phi)) * node.mark * grid.weight(v);
    }
    l[i] = lhs;
    r[i] = rhs;
  });
  return detail::paired(l, r, batches);
}

// (L F)(eta) = sum_x s_x [F(eta - x) - F(eta)] + sum_nodes [F(eta + s delta_x) - F(eta)] e^{-Phi} s W.
template<typename F>
double glauber_generator(const F& f, AtomSpan eta, const RadialPotential& phi, const GridSpec& grid) {
  const double f0 = f(eta);
  double out = 0.0;
  std::vector<Atom> buf;
  for(std::size_t k = 0; k < eta.size(); ++k) {
    assign_without(buf, eta, k);
    out += eta[k].mark * (f(AtomSpan(buf)) - f0);
  }
  for(std::size_t v = 0; v < grid.size(); ++v) {
    const Atom& node = grid.node(v);
    assign_with_atom(buf, eta, node);
    out += (f(AtomSpan(buf)) - f0) * std::exp(-phi_energy(node.mark, node.position, eta, phi)) * node.mark * grid.weight(v);
  }
  return out;
}

// lhs = E sum_x s_x D^-F D^-G with D^-H(eta) = H(eta - s_x delta_x) - H(eta); rhs = -E (L F) G.
template<typename F, typename G>
PairedEstimate dirichlet_residual(const F& f, const G& g, const McSample& samples, const RadialPotential& phi,
                                  const GridSpec& grid, std::size_t batches = kDefaultBatches) {
  const std::size_t n = samples.measures.size();
  std::vector<double> l(n);
  std::vector<double> r(n);
  detail::per_sample(samples, [&](std::size_t i, AtomSpan eta) {
    const double f0 = f(eta);
    const double g0 = g(eta);
    std::vector<Atom> buf;
    double lhs = 0.0;
    for(std::size_t k = 0; k < eta.size(); ++k) {
      assign_without(buf, eta, k);
      lhs += eta[k].mark * (f(AtomSpan(buf)) - f0) * (g(AtomSpan(buf)) - g0);
    }
    l[i] = lhs;
    r[i] = -glauber_generator(f, eta, phi, grid) * g0;
  });
  return detail::paired(l, r, batches);
}

struct MomentCheck {
  double expected = 0.0;
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  double ks_statistic = 0.0;
  double ks_critical = 0.0; // 1% level
  bool mean_ok = false;
  bool variance_ok = false;
  bool ks_ok = false;
};

// Kolmogorov-Smirnov distance of the empirical law of x to cdf.
template<typename Cdf>
double ks_statistic(std::vector<double> x, Cdf&& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for(std::size_t i = 0; i < x.size(); ++i) {
    const double c = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - c, c - static_cast<double>(i) / n});
  }
  return d;
}

inline constexpr double kKsCoefficient1Percent = 1.62762;

// Total mass eta(box): mean and variance against theta sigma(box), and a
// KS test against Gamma(theta sigma(box), 1).
inline MomentCheck gamma_mass_check(const McSample& s, const GibbsParams& p) {
  MomentCheck c;
  const double k = p.theta * p.box.volume();
  c.expected = k;
  const std::size_t n = s.measures.size();
  if(n < 2) throw std::invalid_argument("need at least two samples");
  std::vector<double> m(n);
  for(std::size_t i = 0; i < n; ++i) m[i] = s.measures[i].mass();
  c.mean = detail::mean_of(m);
  std::vector<double> d2(n);
  std::vector<double> d4(n);
  for(std::size_t i = 0; i < n; ++i) {
    const double dv = m[i] - c.mean;
    d2[i] = dv * dv;
    d4[i] = d2[i] * d2[i];
  }
  const double nd = static_cast<double>(n);
  c.variance = pairwise_sum(d2) / (nd - 1.0);
  const double m4 = pairwise_sum(d4) / nd;
  c.mean_se = std::sqrt(c.variance / nd);
  c.variance_se = std::sqrt(std::max(m4 - c.variance * c.variance, 0.0) / nd);
  c.ks_statistic = ks_statistic(m, [k](double x) { return x <= 0.0 ? 0.0 : boost::math::gamma_p(k, x); });
  c.ks_critical = kKsCoefficient1Percent / std::sqrt(nd);
  c.mean_ok = std::abs(c.mean - k) <= 3.0 * c.mean_se;
  c.variance_ok = std::abs(c.variance - k) <= 3.0 * c.variance_se;
  c.ks_ok = c.ks_statistic < c.ks_critical;
  return c;
}

// ---------------------------------------------------------------------------
// Operators on the discretized Lebesgue-Poisson measure with nu_theta marks.

class GlauberModel {
public:
  GlauberModel(RadialPotential phi, GridSpec grid) : phi_(std::move(phi)), grid_(std::move(grid)) {
    if(!(grid_.marks().theta > 0.0)) throw std::invalid_argument("GlauberModel: grid marks must carry nu_theta weights");
  }
  const RadialPotential& potential() const noexcept { return phi_; }
  const GridSpec& grid() const noexcept { return grid_; }
  double theta() const noexcept { return grid_.marks().theta; }

private:
  RadialPotential phi_;
  GridSpec grid_;
};

// (L^_0 G, L^_1 G) with L^_0 G = -S G and
// L^_1 G = int s sum_{xi in eta} G(xi + s delta_x) e^{-Phi((s,x), xi)} e_lambda(f_{s,x}, eta - xi).
template<typename G>
std::array<double, 2> hat_l_glauber_parts(const G& g, AtomSpan eta, const GlauberModel& model) {
  const auto& grid = model.grid();
  const auto& phi = model.potential();
  check_enumeration_budget(eta.size(), kMaxEnumerationAtoms, "hat_l_glauber");
  std::array<double, 2> out{-total_mass(eta) * g(eta), 0.0};
  const std::size_t n = eta.size();
  const std::uint64_t count = std::uint64_t{1} << n;
  std::vector<double> f(n);
  std::vector<Atom> xi;
  std::vector<Atom> buf;
  for_each_free_node(grid, eta, [&](const Atom& x, double w) {
    for(std::size_t k = 0; k < n; ++k) f[k] = std::exp(-2.0 * x.mark * eta[k].mark * phi(x.position, eta[k].position)) - 1.0;
    double acc = 0.0;
    for(std::uint64_t mask = 0; mask < count; ++mask) {
      double weight = 1.0;
      xi.clear();
      for(std::size_t k = 0; k < n; ++k) {
        if(mask >> k & 1U) {
          weight *= 1.0 + f[k];
          xi.push_back(eta[k]);
        } else {
          weight *= f[k];
        }
      }
      if(weight == 0.0) continue;
      assign_with_atom(buf, xi, x);
      acc += g(AtomSpan(buf)) * weight;
    }
    out[1] += x.mark * acc * w;
  });
  return out;
}

template<typename G>
double hat_l_glauber(const G& g, AtomSpan eta, const GlauberModel& model) {
  const auto p = hat_l_glauber_parts(g, eta, model);
  return p[0] + p[1];
}

namespace detail {
// Sorted union of two atom lists; coinciding positions add their marks.
inline void assign_union(std::vector<Atom>& out, AtomSpan a, AtomSpan b) {
  out.assign(a.begin(), a.end());
  std::vector<Atom> tmp;
  for(const auto& atom: b) {
    assign_with_atom(tmp, out, atom);
    out.swap(tmp);
  }
}
} // namespace detail

// (L^tri k)(eta) = -S k(eta)
//   + sum_x s_x e^{-Phi((s_x,x), eta - s_x delta_x)} int e_lambda(f_{s_x,x}, xi) k(eta + xi - s_x delta_x) d lambda(xi).
// The inner integral is truncated at n_max - |eta| + 1 atoms; under kExclude
// it runs over configurations avoiding the positions of eta.
template<typename K>
double l_triangle_glauber(const K& k, AtomSpan eta, const GlauberModel& model, std::size_t n_max) {
  if(eta.empty()) return 0.0;
  const auto& grid = model.grid();
  const auto& phi = model.potential();
  double out = -total_mass(eta) * k(eta);
  const std::size_t inner = n_max + 1 >= eta.size() ? n_max + 1 - eta.size() : 0;
  const bool exclude = grid.excludes_repeated();
  std::vector<Atom> rest;
  std::vector<Atom> buf;
  for(std::size_t j = 0; j < eta.size(); ++j) {
    const Atom& x = eta[j];
    assign_without(rest, eta, j);
    const double boltz = std::exp(-phi_energy(x.mark, x.position, rest, phi));
    std::vector<double> terms(inner + 1, 0.0);
    terms[0] = k(AtomSpan(rest));
    if(inner > 0 && phi.form != "zero") {
      for_each_lp_configuration(grid, inner, false, [&](AtomSpan xi, std::size_t n, double w) {
        if(n == 0) return;
        double e = 1.0;
        for(const auto& a: xi) {
          if(exclude && detail::occupies(eta, a.position)) return;
          e *= std::exp(-2.0 * x.mark * a.mark * phi(x.position, a.position)) - 1.0;
        }
        if(e == 0.0) return;
        detail::assign_union(buf, rest, xi);
        terms[n] += e * k(AtomSpan(buf)) * w;
      });
    }
    double integral = 0.0;
    for(double t: terms) integral += t;
    out += x.mark * boltz * integral;
  }
  return out;
}

struct GlauberConditionReport {
  double theta = 0.0;
  double alpha = 0.0;
  double C = 0.0;
  double sup_integral = 0.0; // sup_x sum_i phi(x, x_i) u_i over grid positions
  double lhs = 0.0;          // theta sup_integral
  double rhs = 0.0;          // alpha (1 - alpha) / (2 C)
  double slack = 0.0;        // rhs - lhs
  bool params_ok = false;    // C > 2, alpha in (0, 1)
  bool positive = false;     // phi >= 0
  bool smallparam = false;
  bool holds = false;
};

inline GlauberConditionReport glauber_condition_check(const RadialPotential& phi, double theta, double alpha, double C,
                                                      const GridSpec& grid) {
  GlauberConditionReport r;
  r.theta = theta;
  r.alpha = alpha;
  r.C = C;
  const auto& sp = grid.space();
  for(const auto& x: sp.nodes) {
    double acc = 0.0;
    for(std::size_t i = 0; i < sp.size(); ++i) acc += phi(x, sp.nodes[i]) * sp.weights[i];
    r.sup_integral = std::max(r.sup_integral, acc);
  }
  r.lhs = theta * r.sup_integral;
  r.rhs = alpha * (1.0 - alpha) / (2.0 * C);
  r.slack = r.rhs - r.lhs;
  r.params_ok = C > 2.0 && alpha > 0.0 && alpha < 1.0;
  r.positive = is_nonnegative(phi);
  r.smallparam = r.slack >= 0.0;
  r.holds = r.params_ok && r.positive && r.smallparam;
  return r;
}

struct GlauberRelativeBound {
  double bound = 0.0; // 1 / C
  double max_ratio = 0.0;
  std::vector<double> ratios; // negative when skipped
  std::vector<std::array<double, 2>> norms;
  std::size_t skipped = 0;
  double slack = 1e-8;
  bool holds = true;
};

template<typename G>
GlauberRelativeBound relative_bound_glauber(const std::vector<G>& samples, const GlauberModel& model, double alpha,
                                            double C, std::size_t n_max) {
  GlauberRelativeBound r;
  r.bound = 1.0 / C;
  r.ratios.assign(samples.size(), -1.0);
  r.norms.resize(samples.size());
  const WeightedNormParams p{alpha, C};
  parallel_blocks(samples.size(), [&](std::size_t i) {
    for(std::size_t part = 0; part < 2; ++part) {
      r.norms[i][part] = lp_integrate(
                             [&](AtomSpan eta) {
                               return std::abs(hat_l_glauber_parts(samples[i], eta, model)[part]) * weight_ic(eta, p);
                             },
                             model.grid(), n_max)
                             .value;
    }
    if(r.norms[i][0] > 0.0) r.ratios[i] = r.norms[i][1] / r.norms[i][0];
  });
  for(double x: r.ratios) {
    if(x < 0.0) {
      ++r.skipped;
      continue;
    }
    r.max_ratio = std::max(r.max_ratio, x);
    if(x > r.bound + r.slack) r.holds = false;
  }
  return r;
}

} // namespace drm

#endif // DRM_GLAUBER_HPP
