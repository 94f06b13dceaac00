#ifndef DRM_CONTACT_HPP
#define DRM_CONTACT_HPP

// Contact model with marks: the descendant operator, its dual on correlation
// functions, the discretized correlation hierarchy and its two-sided bounds.
//
// Kernels live on the torus obtained from the space box (minimal-image
// displacement), so that the dispersal integral of a is the same at every
// grid position.

#include "drm/cone.hpp"
#include "drm/discretization.hpp"
#include "drm/hierarchy.hpp"
#include "drm/kernels.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace drm {

struct ContactKernels {
  MarkKernel m;
  MarkPairKernel q; // q(parent mark, offspring mark)
  SpatialKernel a;  // a(parent position - offspring position)
};

// Rates bound to a grid (for the torus displacement).
class ContactModel {
public:
  ContactModel(ContactKernels k, GridSpec grid) : k_(std::move(k)), grid_(std::move(grid)) {}

  const GridSpec& grid() const noexcept { return grid_; }
  const ContactKernels& kernels() const noexcept { return k_; }

  double death(double s) const { return k_.m(s); }
  double dispersal(const Position& parent, const Position& child) const {
    return k_.a(grid_.space().periodic_displacement(parent, child));
  }
  // q(s_p, s_c) a(x_p - x_c).
  double birth(const Atom& parent, const Atom& child) const {
    return k_.q(parent.mark, child.mark) * dispersal(parent.position, child.position);
  }

private:
  ContactKernels k_;
  GridSpec grid_;
};

struct ContactRates {
  std::vector<double> marks; // grid mark nodes
  std::vector<double> kappa; // kappa(s_j)
  std::vector<double> m;     // m(s_j)
  std::vector<double> r;     // kappa - m
  double R = 0.0;            // max r
  double mu = 0.0;           // max m
  double a_integral = 0.0;   // int a dsigma on the grid
  double sup_qa = 0.0;       // max over node pairs of q a
};

inline ContactRates rate_report(const ContactModel& model) {
  const auto& grid = model.grid();
  const auto& sp = grid.space();
  const auto& mk = grid.marks();
  ContactRates out;
  for(std::size_t i = 0; i < sp.size(); ++i) out.a_integral += model.dispersal(sp.nodes[i], sp.nodes[0]) * sp.weights[i];
  out.R = -HUGE_VAL;
  for(std::size_t j = 0; j < mk.size(); ++j) {
    double qint = 0.0;
    for(std::size_t jp = 0; jp < mk.size(); ++jp) qint += model.kernels().q(mk.nodes[jp], mk.nodes[j]) * mk.weights[jp];
    const double kappa = out.a_integral * qint;
    const double m = model.death(mk.nodes[j]);
    out.marks.push_back(mk.nodes[j]);
    out.kappa.push_back(kappa);
    out.m.push_back(m);
    out.r.push_back(kappa - m);
    out.R = std::max(out.R, kappa - m);
    out.mu = std::max(out.mu, m);
  }
  for(std::size_t v = 0; v < grid.size(); ++v) {
    for(std::size_t w = 0; w < grid.size(); ++w) out.sup_qa = std::max(out.sup_qa, model.birth(grid.node(v), grid.node(w)));
  }
  return out;
}

// Grid tabulation: birth(v', v) for parent v', child v, and the one-slot
// generator Q = A_1 - B_1 with Q(v, v') = birth(v', v) W_{v'} - m(s_v) delta.
struct ContactTables {
  std::size_t V = 0;
  Eigen::MatrixXd birth;
  Eigen::VectorXd m;
  Eigen::VectorXd kappa; // row sums of A_1
  Eigen::MatrixXd Q;
};

inline ContactTables tabulate(const ContactModel& model) {
  const auto& grid = model.grid();
  ContactTables t;
  t.V = grid.size();
  const auto V = static_cast<Eigen::Index>(t.V);
  t.birth.resize(V, V);
  t.m.resize(V);
  t.kappa.resize(V);
  t.Q.resize(V, V);
  for(Eigen::Index p = 0; p < V; ++p) {
    for(Eigen::Index c = 0; c < V; ++c) {
      t.birth(p, c) = model.birth(grid.node(static_cast<std::size_t>(p)), grid.node(static_cast<std::size_t>(c)));
    }
  }
  for(Eigen::Index v = 0; v < V; ++v) {
    t.m[v] = model.death(grid.node(static_cast<std::size_t>(v)).mark);
    double row = 0.0;
    for(Eigen::Index w = 0; w < V; ++w) {
      const double a = t.birth(w, v) * grid.weight(static_cast<std::size_t>(w));
      t.Q(v, w) = a;
      row += a;
    }
    t.kappa[v] = row;
    t.Q(v, v) -= t.m[v];
  }
  return t;
}

// (W^(n) x)(v_1..v_n) = sum_i [sum_{j != i} birth(v_j, v_i)] x(v without slot i).
inline Eigen::VectorXd apply_insertion(const Eigen::MatrixXd& birth, const Eigen::VectorXd& x, std::size_t n) {
  const auto V = static_cast<std::size_t>(birth.rows());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ipow(V, n)));
  if(n < 2) return y;
  std::vector<std::size_t> digits;
  std::vector<std::size_t> reduced(n - 1);
  for(Eigen::Index idx = 0; idx < y.size(); ++idx) {
    decode_index(static_cast<std::size_t>(idx), V, n, digits);
    double acc = 0.0;
    for(std::size_t i = 0; i < n; ++i) {
      double mult = 0.0;
      for(std::size_t j = 0; j < n; ++j) {
        if(j != i) mult += birth(static_cast<Eigen::Index>(digits[j]), static_cast<Eigen::Index>(digits[i]));
      }
      if(mult == 0.0) continue;
      std::size_t r = 0;
      for(std::size_t j = 0; j < n; ++j) {
        if(j != i) reduced[r++] = digits[j];
      }
      acc += mult * x[static_cast<Eigen::Index>(encode_index(reduced, V))];
    }
    y[idx] = acc;
  }
  return y;
}

// Dense operators on grid^n (small grids only).
struct ContactOperators {
  Eigen::MatrixXd A, B, C, Vop, M, W;
};

inline constexpr std::size_t kMaxDenseOperatorSize = 4096;

inline ContactOperators build_operators(std::size_t n, const ContactTables& t, const GridSpec& grid) {
  if(n == 0) throw std::invalid_argument("build_operators: n must be >= 1");
  const std::size_t size = ipow(t.V, n);
  if(size > kMaxDenseOperatorSize) {
    throw std::length_error("build_operators: dense operator of size " + std::to_string(size) + " exceeds budget");
  }
  const auto N = static_cast<Eigen::Index>(size);
  ContactOperators op;
  Eigen::MatrixXd A1(t.V, t.V);
  for(std::size_t v = 0; v < t.V; ++v) {
    for(std::size_t w = 0; w < t.V; ++w) {
      A1(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(w)) =
          t.birth(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(v)) * grid.weight(w);
    }
  }
  op.A = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd bdiag = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd cdiag = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(N);
  for(Eigen::Index col = 0; col < N; ++col) {
    e.setZero();
    e[col] = 1.0;
    op.A.col(col) = apply_slot_sum(A1, e, n);
  }
  std::vector<std::size_t> digits;
  for(Eigen::Index idx = 0; idx < N; ++idx) {
    decode_index(static_cast<std::size_t>(idx), t.V, n, digits);
    for(auto d: digits) {
      bdiag[idx] += t.m[static_cast<Eigen::Index>(d)];
      cdiag[idx] += t.kappa[static_cast<Eigen::Index>(d)];
    }
  }
  op.B = bdiag.asDiagonal();
  op.C = cdiag.asDiagonal();
  op.Vop = (cdiag - bdiag).asDiagonal();
  op.M = op.A - op.C;
  if(n >= 2) {
    const auto Nl = static_cast<Eigen::Index>(ipow(t.V, n - 1));
    op.W.resize(N, Nl);
    Eigen::VectorXd el = Eigen::VectorXd::Zero(Nl);
    for(Eigen::Index col = 0; col < Nl; ++col) {
      el.setZero();
      el[col] = 1.0;
      op.W.col(col) = apply_insertion(t.birth, el, n);
    }
  } else {
    op.W = Eigen::MatrixXd::Zero(N, 0);
  }
  return op;
}

// Solves dk^(n)/dt = (M + V) k^(n) + W k^(n-1) level by level: level 1 by the
// matrix exponential of the one-slot generator, higher levels by the Duhamel
// formula with an 8-point Gauss-Legendre rule per panel. Lower-level values at
// the quadrature times are computed by the same recursion inside each panel.
class ContactEvolver {
public:
  explicit ContactEvolver(ContactTables tables) : t_(std::move(tables)), rule_(gauss_legendre(8)) {}

  const ContactTables& tables() const noexcept { return t_; }

  HierarchyState evolve(const HierarchyState& k0, double t, std::size_t steps) {
    if(steps < 1) throw std::invalid_argument("evolve_hierarchy: steps must be >= 1");
    if(!(t >= 0.0)) throw std::invalid_argument("evolve_hierarchy: t must be >= 0");
    if(k0.nodes != t_.V) throw std::invalid_argument("evolve_hierarchy: state does not match the grid");
    require_finite(k0, "evolve_hierarchy input");
    HierarchyState cur = k0;
    if(t == 0.0) return cur;
    const double h = t / static_cast<double>(steps);
    for(std::size_t p = 0; p < steps; ++p) {
      panel_start_ = &cur.levels;
      cache_.clear();
      std::vector<Eigen::VectorXd> next;
      for(std::size_t n = 1; n <= cur.n_max(); ++n) next.push_back(level_at(n, h));
      cur.levels = std::move(next);
      require_finite(cur, "evolve_hierarchy");
    }
    cur.t = k0.t + t;
    panel_start_ = nullptr;
    return cur;
  }

  const Eigen::MatrixXd& propagator(double dt) {
    auto it = exp_cache_.find(dt);
    if(it == exp_cache_.end()) {
      Eigen::MatrixXd E = (dt * t_.Q).exp();
      if(!E.allFinite()) throw NumericalAbort("matrix exponential: non-finite result");
      it = exp_cache_.emplace(dt, std::move(E)).first;
    }
    return it->second;
  }

private:
  const Eigen::VectorXd& level_at(std::size_t n, double dt) {
    const auto key = std::make_pair(n, dt);
    if(auto it = cache_.find(key); it != cache_.end()) return it->second;
    const auto& start = (*panel_start_)[n - 1];
    Eigen::VectorXd r = apply_all_modes(propagator(dt), start, n);
    if(n >= 2) {
      for(std::size_t q = 0; q < rule_.nodes.size(); ++q) {
        const double c = 0.5 * (rule_.nodes[q] + 1.0);
        const double tau = dt * c;
        const Eigen::VectorXd src = apply_insertion(t_.birth, level_at(n - 1, tau), n);
        r += (0.5 * dt * rule_.weights[q]) * apply_all_modes(propagator(dt - tau), src, n);
      }
    }
    return cache_.emplace(key, std::move(r)).first->second;
  }

  ContactTables t_;
  GaussLegendreRule rule_;
  std::map<double, Eigen::MatrixXd> exp_cache_;
  std::map<std::pair<std::size_t, double>, Eigen::VectorXd> cache_;
  const std::vector<Eigen::VectorXd>* panel_start_ = nullptr;
};

inline HierarchyState evolve_hierarchy(const HierarchyState& k0, double t, std::size_t steps, const ContactTables& tables) {
  ContactEvolver ev(tables);
  return ev.evolve(k0, t, steps);
}

// Classical RK4 with fixed step dt on the same truncated system; states are
// recorded at each requested time (times must be nondecreasing).
inline std::vector<HierarchyState> rk4_hierarchy(const HierarchyState& k0, const std::vector<double>& times, double dt,
                                                 const ContactTables& t) {
  if(!(dt > 0.0)) throw std::invalid_argument("rk4_hierarchy: dt must be > 0");
  auto rhs = [&](const std::vector<Eigen::VectorXd>& k) {
    std::vector<Eigen::VectorXd> out(k.size());
    for(std::size_t n = 1; n <= k.size(); ++n) {
      out[n - 1] = apply_slot_sum(t.Q, k[n - 1], n);
      if(n >= 2) out[n - 1] += apply_insertion(t.birth, k[n - 2], n);
    }
    return out;
  };
  auto axpy = [](std::vector<Eigen::VectorXd> x, double a, const std::vector<Eigen::VectorXd>& y) {
    for(std::size_t n = 0; n < x.size(); ++n) x[n] += a * y[n];
    return x;
  };
  std::vector<HierarchyState> out;
  HierarchyState cur = k0;
  std::size_t done = 0;
  for(double target: times) {
    if(target < cur.t - k0.t) throw std::invalid_argument("rk4_hierarchy: times must be nondecreasing");
    const auto total = static_cast<std::size_t>(std::llround(target / dt));
    for(; done < total; ++done) {
      const auto k1 = rhs(cur.levels);
      const auto k2 = rhs(axpy(cur.levels, 0.5 * dt, k1));
      const auto k3 = rhs(axpy(cur.levels, 0.5 * dt, k2));
      const auto k4 = rhs(axpy(cur.levels, dt, k3));
      for(std::size_t n = 0; n < cur.levels.size(); ++n) cur.levels[n] += dt / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]);
    }
    require_finite(cur, "rk4_hierarchy");
    cur.t = k0.t + static_cast<double>(done) * dt;
    out.push_back(cur);
  }
  return out;
}

// Largest max-norm difference over levels, relative to the level's max norm in b.
inline double relative_level_distance(const HierarchyState& a, const HierarchyState& b) {
  double worst = 0.0;
  for(std::size_t n = 1; n <= b.n_max(); ++n) {
    const double scale = max_norm(b.level(n));
    const double diff = max_norm(a.level(n) - b.level(n));
    worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Bound checks.

struct PositivityReport {
  bool holds = true;
  double min_entry = 0.0;
  double scale = 0.0; // max entry over all levels
  double tolerance = 0.0;
};

inline PositivityReport positivity_check(const HierarchyState& s, double rel_tol = 1e-9) {
  PositivityReport r;
  r.min_entry = HUGE_VAL;
  for(const auto& x: s.levels) {
    if(x.size() == 0) continue;
    r.min_entry = std::min(r.min_entry, x.minCoeff());
    r.scale = std::max(r.scale, x.maxCoeff());
  }
  r.tolerance = rel_tol * r.scale;
  r.holds = r.min_entry >= -r.tolerance;
  return r;
}

inline double factorial(std::size_t n) {
  double f = 1.0;
  for(std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

struct LevelBound {
  std::size_t n = 0;
  double t = 0.0;
  double observed = 0.0;
  double bound = 0.0;
  double margin = 0.0; // upper: bound - observed; lower: observed - bound
  bool holds = false;
};

struct UpperBoundReport {
  bool hypothesis = true; // ||k_0^(n)|| <= C^n n! for all levels
  bool holds = true;
  std::string branch;     // "R<0" or "R>=0"
  std::vector<LevelBound> levels;
};

inline bool upper_bound_hypothesis(const HierarchyState& k0, double C) {
  for(std::size_t n = 1; n <= k0.n_max(); ++n) {
    if(max_norm(k0.level(n)) > std::pow(C, static_cast<double>(n)) * factorial(n)) return false;
  }
  return true;
}

inline double upper_bound_value(std::size_t n, double t, double C, double R) {
  const double nd = static_cast<double>(n);
  const double growth = R < 0.0 ? std::exp(t * R) : std::exp(t * nd * R);
  return growth * std::pow(C + t, nd) * factorial(n);
}

inline UpperBoundReport upper_bound_check(const HierarchyState& state, double C, const ContactRates& rates,
                                          bool hypothesis = true) {
  UpperBoundReport r;
  r.hypothesis = hypothesis;
  r.branch = rates.R < 0.0 ? "R<0" : "R>=0";
  for(std::size_t n = 1; n <= state.n_max(); ++n) {
    LevelBound b;
    b.n = n;
    b.t = state.t;
    b.observed = max_norm(state.level(n));
    b.bound = upper_bound_value(n, state.t, C, rates.R);
    b.margin = b.bound - b.observed;
    b.holds = b.margin >= 0.0;
    r.holds = r.holds && b.holds;
    r.levels.push_back(b);
  }
  return r;
}

// Sub-region of the grid: positions in box and marks in [mark_lo, mark_hi].
struct NodeRegion {
  Box box;
  double mark_lo = 0.0;
  double mark_hi = HUGE_VAL;

  std::vector<std::size_t> nodes(const GridSpec& grid) const {
    std::vector<std::size_t> out;
    for(std::size_t v = 0; v < grid.size(); ++v) {
      const auto& a = grid.node(v);
      if(box.contains(a.position) && a.mark >= mark_lo && a.mark <= mark_hi) out.push_back(v);
    }
    return out;
  }
};

struct LowerBoundSetup {
  std::vector<std::size_t> nodes; // B
  double k0_min = 0.0;            // min of k_0^(1) on B
  double qa_min = 0.0;            // min of q a on B x B
  double alpha = 0.0;
  double mass = 0.0; // (nu x sigma)(B) on the grid
  double beta = 0.0;
  double mu = 0.0;
  bool admissible = false; // alpha > 0 and beta < mu
  std::string reason;
};

inline LowerBoundSetup lower_bound_setup(const HierarchyState& k0, const NodeRegion& region, const ContactTables& t,
                                         const GridSpec& grid, const ContactRates& rates) {
  LowerBoundSetup s;
  s.nodes = region.nodes(grid);
  s.mu = rates.mu;
  if(s.nodes.empty()) {
    s.reason = "region contains no grid nodes";
    return s;
  }
  s.k0_min = HUGE_VAL;
  s.qa_min = HUGE_VAL;
  for(auto v: s.nodes) {
    s.k0_min = std::min(s.k0_min, k0.level(1)[static_cast<Eigen::Index>(v)]);
    s.mass += grid.weight(v);
    for(auto w: s.nodes) s.qa_min = std::min(s.qa_min, t.birth(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(w)));
  }
  s.alpha = std::min(s.k0_min, s.qa_min);
  s.beta = s.alpha * s.mass;
  if(!(s.alpha > 0.0)) {
    s.reason = "alpha <= 0";
  } else if(!(s.beta < s.mu)) {
    s.reason = "beta >= mu";
  } else {
    s.admissible = true;
  }
  return s;
}

// T_n = sum_{j=1}^{n-1} 1/j.
inline double harmonic_time(std::size_t n) {
  double s = 0.0;
  for(std::size_t j = 1; j < n; ++j) s += 1.0 / static_cast<double>(j);
  return s;
}

inline double lower_bound_value(std::size_t n, double t, const LowerBoundSetup& s) {
  const double nd = static_cast<double>(n);
  return std::pow(s.alpha, nd) * std::exp((s.beta - s.mu) * nd * t) * factorial(n);
}

// min over B^n of k_t^(n) against alpha^n e^{(beta - mu) n t} n!.
inline LevelBound lower_bound_check(const HierarchyState& state, std::size_t n, const LowerBoundSetup& s) {
  if(!s.admissible) throw std::logic_error("lower_bound_check: hypotheses not met (" + s.reason + ")");
  LevelBound b;
  b.n = n;
  b.t = state.t;
  const auto& x = state.level(n);
  const std::size_t k = s.nodes.size();
  std::vector<std::size_t> pick(n, 0);
  std::vector<std::size_t> digits(n);
  b.observed = HUGE_VAL;
  for(;;) {
    for(std::size_t i = 0; i < n; ++i) digits[i] = s.nodes[pick[i]];
    b.observed = std::min(b.observed, x[static_cast<Eigen::Index>(encode_index(digits, state.nodes))]);
    std::size_t i = 0;
    while(i < n && ++pick[i] == k) pick[i++] = 0;
    if(i == n) break;
  }
  b.bound = lower_bound_value(n, state.t, s);
  b.margin = b.observed - b.bound;
  b.holds = b.margin >= 0.0;
  return b;
}

// ---------------------------------------------------------------------------
// Operators on functions of finite measures. Integrals over the inserted atom
// run over grid nodes; under kExclude, nodes at occupied positions are skipped.

// (L^ G)(eta) = -sum_x m(s_x) G(eta)
//   + sum_x int q(s_x, s) a(x - y) [G(eta - s_x delta_x + s delta_y) + G(eta + s delta_y)].
template<typename G>
double hat_l_contact(const G& g, AtomSpan eta, const ContactModel& model) {
  const auto& grid = model.grid();
  if(eta.empty()) return 0.0;
  double death = 0.0;
  for(const auto& a: eta) death += model.death(a.mark);
  double out = -death * g(eta);
  std::vector<Atom> rest;
  std::vector<Atom> buf;
  for(std::size_t k = 0; k < eta.size(); ++k) {
    const Atom& x = eta[k];
    assign_without(rest, eta, k);
    double acc = 0.0;
    for_each_free_node(grid, rest, [&](const Atom& y, double w) {
      const double rate = model.birth(x, y);
      if(rate == 0.0) return;
      assign_with_atom(buf, rest, y);
      acc += rate * g(AtomSpan(buf)) * w;
    });
    for_each_free_node(grid, eta, [&](const Atom& y, double w) {
      const double rate = model.birth(x, y);
      if(rate == 0.0) return;
      assign_with_atom(buf, eta, y);
      acc += rate * g(AtomSpan(buf)) * w;
    });
    out += acc;
  }
  return out;
}

// (L^tri k)(eta) = -sum_x m(s_x) k(eta)
//   + sum_y int q(s, s_y) a(x - y) k(eta - s_y delta_y + s delta_x)
//   + sum_y sum_{x != y} q(s_x, s_y) a(x - y) k(eta - s_y delta_y).
template<typename K>
double l_triangle_contact(const K& k, AtomSpan eta, const ContactModel& model) {
  const auto& grid = model.grid();
  if(eta.empty()) return 0.0;
  double death = 0.0;
  for(const auto& a: eta) death += model.death(a.mark);
  double out = -death * k(eta);
  std::vector<Atom> rest;
  std::vector<Atom> buf;
  for(std::size_t j = 0; j < eta.size(); ++j) {
    const Atom& y = eta[j];
    assign_without(rest, eta, j);
    double acc = 0.0;
    for_each_free_node(grid, rest, [&](const Atom& x, double w) {
      const double rate = model.birth(x, y);
      if(rate == 0.0) return;
      assign_with_atom(buf, rest, x);
      acc += rate * k(AtomSpan(buf)) * w;
    });
    double pair = 0.0;
    for(std::size_t i = 0; i < eta.size(); ++i) {
      if(i != j) pair += model.birth(eta[i], y);
    }
    if(pair != 0.0) acc += pair * k(AtomSpan(rest));
    out += acc;
  }
  return out;
}

} // namespace drm

#endif // DRM_CONTACT_HPP
