#ifndef DRM_BDLP_HPP
#define DRM_BDLP_HPP

// Birth-death model with competition: descendant operator split into four
// parts, parameter conditions, relative bounds in the weighted L^1 space,
// the dual operator on correlation functions and a truncated hierarchy.
//
// Kernels are evaluated on the torus of the space box, as in the contact model.

#include "drm/cone.hpp"
#include "drm/discretization.hpp"
#include "drm/hierarchy.hpp"
#include "drm/kernels.hpp"
#include "drm/parallel.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace drm {

struct BdlpKernels {
  MarkKernel m;
  MarkPairKernel q_plus;
  MarkPairKernel q_minus;
  SpatialKernel a_plus;
  SpatialKernel a_minus;
};

class BdlpModel {
public:
  // Rejects q+ or q- that are not symmetric on the grid marks.
  BdlpModel(BdlpKernels k, GridSpec grid) : k_(std::move(k)), grid_(std::move(grid)) {
    const auto& s = grid_.marks().nodes;
    for(double a: s) {
      for(double b: s) {
        if(k_.q_plus(a, b) != k_.q_plus(b, a)) throw std::invalid_argument("q_plus must be symmetric");
        if(k_.q_minus(a, b) != k_.q_minus(b, a)) throw std::invalid_argument("q_minus must be symmetric");
      }
    }
    const auto& sp = grid_.space();
    for(std::size_t i = 0; i < sp.size(); ++i) {
      const Position d = sp.periodic_displacement(sp.nodes[i], sp.nodes[0]);
      kappa_plus_ += k_.a_plus(d) * sp.weights[i];
      kappa_minus_ += k_.a_minus(d) * sp.weights[i];
    }
    if(!(kappa_plus_ > 0.0) || !(kappa_minus_ > 0.0)) throw std::invalid_argument("kappa+ and kappa- must be positive");
  }

  const GridSpec& grid() const noexcept { return grid_; }
  const BdlpKernels& kernels() const noexcept { return k_; }
  double kappa_plus() const noexcept { return kappa_plus_; }
  double kappa_minus() const noexcept { return kappa_minus_; }

  double death(double s) const { return k_.m(s); }
  // q-(s_x, s_y) a-(x - y)
  double competition(const Atom& x, const Atom& y) const {
    return k_.q_minus(x.mark, y.mark) * k_.a_minus(grid_.space().periodic_displacement(x.position, y.position));
  }
  // q+(s_p, s_c) a+(x_p - x_c)
  double birth(const Atom& parent, const Atom& child) const {
    return k_.q_plus(parent.mark, child.mark) *
           k_.a_plus(grid_.space().periodic_displacement(parent.position, child.position));
  }

  // D(eta) = sum_x m(s_x) + sum_x sum_{y != x} q-(s_x, s_y) a-(x - y).
  double load(AtomSpan eta) const {
    double d = 0.0;
    for(std::size_t i = 0; i < eta.size(); ++i) {
      d += death(eta[i].mark);
      for(std::size_t j = 0; j < eta.size(); ++j) {
        if(j != i) d += competition(eta[i], eta[j]);
      }
    }
    return d;
  }

private:
  BdlpKernels k_;
  GridSpec grid_;
  double kappa_plus_ = 0.0;
  double kappa_minus_ = 0.0;
};

// ---------------------------------------------------------------------------
// Descendant operator.

// (v0, v1, v2, v3) with
//   v0 = -D(eta) G(eta)
//   v1 = -sum_x sum_{y != x} q-(s_x, s_y) a-(x - y) G(eta - s_y delta_y)
//   v2 = sum_x int q+(s_x, s) a+(x - y) G(eta - s_x delta_x + s delta_y)
//   v3 = sum_x int q+(s_x, s) a+(x - y) G(eta + s delta_y)
template<typename G>
std::array<double, 4> hat_l_parts(const G& g, AtomSpan eta, const BdlpModel& model) {
  std::array<double, 4> v{0.0, 0.0, 0.0, 0.0};
  if(eta.empty()) return v;
  const auto& grid = model.grid();
  v[0] = -model.load(eta) * g(eta);
  std::vector<Atom> rest;
  std::vector<Atom> buf;
  for(std::size_t k = 0; k < eta.size(); ++k) {
    const Atom& x = eta[k];
    assign_without(rest, eta, k);
    double pair = 0.0;
    for(std::size_t i = 0; i < eta.size(); ++i) {
      if(i != k) pair += model.competition(eta[i], x);
    }
    if(pair != 0.0) v[1] -= pair * g(AtomSpan(rest));
    double move = 0.0;
    for_each_free_node(grid, rest, [&](const Atom& y, double w) {
      const double rate = model.birth(x, y);
      if(rate == 0.0) return;
      assign_with_atom(buf, rest, y);
      move += rate * g(AtomSpan(buf)) * w;
    });
    double add = 0.0;
    for_each_free_node(grid, eta, [&](const Atom& y, double w) {
      const double rate = model.birth(x, y);
      if(rate == 0.0) return;
      assign_with_atom(buf, eta, y);
      add += rate * g(AtomSpan(buf)) * w;
    });
    v[2] += move;
    v[3] += add;
  }
  return v;
}

// Single pass: -D G - sum_y [sum_{x != y} c-(x, y)] G(eta - y)
//   + sum_x int c+(x, y) [G(eta - x + y) + G(eta + y)].
template<typename G>
double hat_l_bdlp(const G& g, AtomSpan eta, const BdlpModel& model) {
  if(eta.empty()) return 0.0;
  const auto& grid = model.grid();
  double out = -model.load(eta) * g(eta);
  std::vector<Atom> rest;
  std::vector<Atom> buf;
  for(std::size_t k = 0; k < eta.size(); ++k) {
    const Atom& x = eta[k];
    assign_without(rest, eta, k);
    double pair = 0.0;
    for(std::size_t i = 0; i < eta.size(); ++i) {
      if(i != k) pair += model.competition(eta[i], x);
    }
    double acc = -pair * g(AtomSpan(rest));
    for_each_free_node(grid, rest, [&](const Atom& y, double w) {
      const double rate = model.birth(x, y);
      if(rate == 0.0) return;
      assign_with_atom(buf, rest, y);
      double both = g(AtomSpan(buf));
      if(!detail::occupies(eta, y.position) || !grid.excludes_repeated()) {
        assign_with_atom(buf, eta, y);
        both += g(AtomSpan(buf));
      }
      acc += rate * both * w;
    });
    out += acc;
  }
  return out;
}

// (L^tri k)(eta) = -D(eta) k(eta)
//   - sum_x int q-(s_x, s) a-(x - y) k(eta + s delta_y)
//   + sum_y int q+(s, s_y) a+(x - y) k(eta - s_y delta_y + s delta_x)
//   + sum_y sum_{x != y} q+(s_x, s_y) a+(x - y) k(eta - s_y delta_y)
template<typename K>
double l_triangle_bdlp(const K& k, AtomSpan eta, const BdlpModel& model) {
  if(eta.empty()) return 0.0;
  const auto& grid = model.grid();
  double out = -model.load(eta) * k(eta);
  std::vector<Atom> rest;
  std::vector<Atom> buf;
  double compete = 0.0;
  for_each_free_node(grid, eta, [&](const Atom& y, double w) {
    double rate = 0.0;
    for(const auto& x: eta) rate += model.competition(x, y);
    if(rate == 0.0) return;
    assign_with_atom(buf, eta, y);
    compete += rate * k(AtomSpan(buf)) * w;
  });
  out -= compete;
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

// ---------------------------------------------------------------------------
// Conditions on (alpha, C, beta).

struct WeightedNormParams {
  double alpha = 0.0;
  double C = 1.0;
};

// I_C(eta) = C^{|tau(eta)|} exp(alpha sum s).
inline double weight_ic(AtomSpan eta, const WeightedNormParams& p) {
  double s = 0.0;
  for(const auto& a: eta) s += a.mark;
  return std::pow(p.C, static_cast<double>(eta.size())) * std::exp(p.alpha * s);
}

struct ConditionResult {
  std::string name;
  double worst_slack = 0.0; // min of (rhs - lhs); >= 0 passes (> 0 for strict)
  bool strict = false;
  bool holds = false;
};

struct ConditionReport {
  double alpha = 0.0;
  double C = 0.0;
  double beta = 0.0;
  double kappa_plus = 0.0;
  double kappa_minus = 0.0;
  std::vector<ConditionResult> conditions; // betaminus, betaplus, betacompare, smallbeta
  double a0 = 0.0;                         // beta kappa- C + kappa+ beta + beta / C
  bool a0_below_half = false;
  bool holds = false;

  const ConditionResult& get(const std::string& name) const {
    for(const auto& c: conditions) {
      if(c.name == name) return c;
    }
    throw std::out_of_range("no condition " + name);
  }
};

inline ConditionReport condition_check(const BdlpModel& model, const WeightedNormParams& p, double beta) {
  if(!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if(!(p.C > 0.0)) throw std::invalid_argument("C must be > 0");
  const auto& grid = model.grid();
  const auto& mk = grid.marks();
  const auto& k = model.kernels();
  ConditionReport r;
  r.alpha = p.alpha;
  r.C = p.C;
  r.beta = beta;
  r.kappa_plus = model.kappa_plus();
  r.kappa_minus = model.kappa_minus();

  constexpr double inf = std::numeric_limits<double>::infinity();
  ConditionResult minus{"betaminus", inf, false, false};
  ConditionResult plus{"betaplus", inf, false, false};
  for(std::size_t j = 0; j < mk.size(); ++j) {
    const double s = mk.nodes[j];
    double lm = 0.0;
    double lp = 0.0;
    for(std::size_t i = 0; i < mk.size(); ++i) {
      const double e = std::exp(p.alpha * mk.nodes[i]) * mk.weights[i];
      lm += k.q_minus(s, mk.nodes[i]) * e;
      lp += k.q_plus(s, mk.nodes[i]) * e;
    }
    minus.worst_slack = std::min(minus.worst_slack, beta * k.m(s) - lm);
    plus.worst_slack = std::min(plus.worst_slack, beta * std::exp(p.alpha * s) * k.m(s) - lp);
  }

  // Grid displacements on the torus, from the first space node.
  ConditionResult compare{"betacompare", inf, false, false};
  const auto& sp = grid.space();
  for(std::size_t i = 0; i < sp.size(); ++i) {
    const Position d = sp.periodic_displacement(sp.nodes[i], sp.nodes[0]);
    const double ap = k.a_plus(d);
    const double am = k.a_minus(d);
    for(double s: mk.nodes) {
      for(double tau: mk.nodes) {
        const double slack = beta * std::exp(p.alpha * tau) * k.q_minus(s, tau) * am - k.q_plus(s, tau) * ap;
        compare.worst_slack = std::min(compare.worst_slack, slack);
      }
    }
  }

  ConditionResult small{"smallbeta", 1.0 / (2.0 * beta) - (r.kappa_plus + r.kappa_minus * p.C + 1.0 / p.C), true, false};

  for(auto* c: {&minus, &plus, &compare}) c->holds = c->worst_slack >= 0.0;
  small.holds = small.worst_slack > 0.0;
  r.conditions = {minus, plus, compare, small};
  r.a0 = beta * r.kappa_minus * p.C + r.kappa_plus * beta + beta / p.C;
  r.a0_below_half = r.a0 < 0.5;
  r.holds = minus.holds && plus.holds && compare.holds && small.holds;
  return r;
}

// ||G||_{alpha, C} = int |G| I_C d lambda.
template<typename G>
double weighted_l1_norm(const G& g, const WeightedNormParams& p, const GridSpec& grid, std::size_t n_max) {
  return lp_integrate([&](AtomSpan eta) { return std::abs(g(eta)) * weight_ic(eta, p); }, grid, n_max).value;
}

// ||L^_i G||_{alpha, C} for i = 0..3.
template<typename G>
std::array<double, 4> part_norms(const G& g, const BdlpModel& model, const WeightedNormParams& p, std::size_t n_max) {
  std::array<double, 4> out{};
  for(std::size_t i = 0; i < 4; ++i) {
    out[i] = lp_integrate([&](AtomSpan eta) { return std::abs(hat_l_parts(g, eta, model)[i]) * weight_ic(eta, p); },
                          model.grid(), n_max)
                 .value;
  }
  return out;
}

struct RelativeBoundSample {
  std::size_t index = 0;
  std::array<double, 4> norms{};
  std::array<double, 3> ratios{};
  bool skipped = false;
};

struct RelativeBoundReport {
  std::array<double, 3> bounds{}; // beta kappa- C, kappa+ beta, beta / C
  std::array<double, 3> max_ratio{};
  std::vector<RelativeBoundSample> samples;
  std::size_t skipped = 0;
  double slack = 1e-8;
  bool holds = true;
};

template<typename G>
RelativeBoundReport relative_bound_estimate(const std::vector<G>& samples, const BdlpModel& model,
                                            const WeightedNormParams& p, double beta, std::size_t n_max) {
  RelativeBoundReport r;
  r.bounds = {beta * model.kappa_minus() * p.C, model.kappa_plus() * beta, beta / p.C};
  r.samples.resize(samples.size());
  parallel_blocks(samples.size(), [&](std::size_t i) {
    auto& s = r.samples[i];
    s.index = i;
    s.norms = part_norms(samples[i], model, p, n_max);
    if(s.norms[0] == 0.0) {
      s.skipped = true;
      return;
    }
    for(std::size_t k = 0; k < 3; ++k) s.ratios[k] = s.norms[k + 1] / s.norms[0];
  });
  for(const auto& s: r.samples) {
    if(s.skipped) {
      ++r.skipped;
      continue;
    }
    for(std::size_t k = 0; k < 3; ++k) {
      r.max_ratio[k] = std::max(r.max_ratio[k], s.ratios[k]);
      if(s.ratios[k] > r.bounds[k] + r.slack) r.holds = false;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Truncated correlation hierarchy driven by L^tri on the grid.

enum class Closure { kZero, kFreeze };

inline Closure closure_from_string(const std::string& s) {
  if(s == "zero") return Closure::kZero;
  if(s == "freeze") return Closure::kFreeze;
  throw std::invalid_argument("unknown closure '" + s + "'");
}
inline std::string to_string(Closure c) { return c == Closure::kZero ? "zero" : "freeze"; }

struct BdlpTables {
  std::size_t V = 0;
  Eigen::MatrixXd birth;       // c+(p, c)
  Eigen::MatrixXd competition; // c-(v, w)
  Eigen::MatrixXd P;           // P(v, w) = c+(w, v) W_w
  Eigen::MatrixXd Cw;          // Cw(v, w) = c-(v, w) W_w
  Eigen::VectorXd m;
};

inline BdlpTables tabulate(const BdlpModel& model) {
  const auto& grid = model.grid();
  BdlpTables t;
  t.V = grid.size();
  const auto V = static_cast<Eigen::Index>(t.V);
  t.birth.resize(V, V);
  t.competition.resize(V, V);
  t.P.resize(V, V);
  t.Cw.resize(V, V);
  t.m.resize(V);
  for(Eigen::Index a = 0; a < V; ++a) {
    const auto& na = grid.node(static_cast<std::size_t>(a));
    t.m[a] = model.death(na.mark);
    for(Eigen::Index b = 0; b < V; ++b) {
      const auto& nb = grid.node(static_cast<std::size_t>(b));
      t.birth(a, b) = model.birth(na, nb);
      t.competition(a, b) = model.competition(na, nb);
    }
  }
  for(Eigen::Index v = 0; v < V; ++v) {
    for(Eigen::Index w = 0; w < V; ++w) {
      const double W = grid.weight(static_cast<std::size_t>(w));
      t.P(v, w) = t.birth(w, v) * W;
      t.Cw(v, w) = t.competition(v, w) * W;
    }
  }
  return t;
}

// D on grid^n: sum_i m(v_i) + sum_i sum_{j != i} c-(v_i, v_j).
inline Eigen::VectorXd load_tensor(const BdlpTables& t, std::size_t n) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(ipow(t.V, n)));
  std::vector<std::size_t> digits;
  for(Eigen::Index idx = 0; idx < d.size(); ++idx) {
    decode_index(static_cast<std::size_t>(idx), t.V, n, digits);
    double acc = 0.0;
    for(std::size_t i = 0; i < n; ++i) {
      const auto vi = static_cast<Eigen::Index>(digits[i]);
      acc += t.m[vi];
      for(std::size_t j = 0; j < n; ++j) {
        if(j != i) acc += t.competition(vi, static_cast<Eigen::Index>(digits[j]));
      }
    }
    d[idx] = acc;
  }
  return d;
}

// y(v) = sum_i sum_w c-(v_i, w) W_w x(v, w) for x on grid^{n+1}.
inline Eigen::VectorXd apply_competition_coupling(const BdlpTables& t, const Eigen::VectorXd& x, std::size_t n) {
  const auto V = static_cast<Eigen::Index>(t.V);
  const auto rows = static_cast<Eigen::Index>(ipow(t.V, n));
  // x as rows x V row-major: entry (idx, w) at idx * V + w.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(x.data(), rows, V);
  const Eigen::MatrixXd S = X * t.Cw.transpose(); // S(idx, u) = sum_w x(idx, w) c-(u, w) W_w
  Eigen::VectorXd y(rows);
  std::vector<std::size_t> digits;
  for(Eigen::Index idx = 0; idx < rows; ++idx) {
    decode_index(static_cast<std::size_t>(idx), t.V, n, digits);
    double acc = 0.0;
    for(auto d: digits) acc += S(idx, static_cast<Eigen::Index>(d));
    y[idx] = acc;
  }
  return y;
}

// y(v) = sum_i [sum_{j != i} c+(v_j, v_i)] x(v without slot i).
inline Eigen::VectorXd apply_pair_insertion(const Eigen::MatrixXd& birth, const Eigen::VectorXd& x, std::size_t n) {
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

class BdlpHierarchy {
public:
  BdlpHierarchy(BdlpTables t, std::size_t n_max, Closure closure) : t_(std::move(t)), n_max_(n_max), closure_(closure) {
    check_tensor_budget(t_.V, n_max);
    for(std::size_t n = 1; n <= n_max; ++n) load_.push_back(load_tensor(t_, n));
  }

  std::vector<Eigen::VectorXd> rhs(const std::vector<Eigen::VectorXd>& k) const {
    std::vector<Eigen::VectorXd> out(n_max_);
    for(std::size_t n = 1; n <= n_max_; ++n) {
      if(closure_ == Closure::kFreeze && n == n_max_) {
        out[n - 1] = Eigen::VectorXd::Zero(k[n - 1].size());
        continue;
      }
      Eigen::VectorXd y = -load_[n - 1].cwiseProduct(k[n - 1]);
      y += apply_slot_sum(t_.P, k[n - 1], n);
      if(n >= 2) y += apply_pair_insertion(t_.birth, k[n - 2], n);
      if(n < n_max_) y -= apply_competition_coupling(t_, k[n], n);
      out[n - 1] = std::move(y);
    }
    return out;
  }

  HierarchyState evolve(const HierarchyState& k0, double t, std::size_t steps) const {
    if(steps < 1) throw std::invalid_argument("steps must be >= 1");
    if(!(t >= 0.0)) throw std::invalid_argument("t must be >= 0");
    if(k0.nodes != t_.V || k0.n_max() != n_max_) throw std::invalid_argument("state does not match hierarchy");
    require_finite(k0, "bdlp initial state");
    HierarchyState s = k0;
    const double h = t / static_cast<double>(steps);
    auto axpy = [](const std::vector<Eigen::VectorXd>& x, double a, const std::vector<Eigen::VectorXd>& y) {
      std::vector<Eigen::VectorXd> r = x;
      for(std::size_t n = 0; n < r.size(); ++n) r[n] += a * y[n];
      return r;
    };
    for(std::size_t step = 0; step < steps; ++step) {
      const auto k1 = rhs(s.levels);
      const auto k2 = rhs(axpy(s.levels, 0.5 * h, k1));
      const auto k3 = rhs(axpy(s.levels, 0.5 * h, k2));
      const auto k4 = rhs(axpy(s.levels, h, k3));
      for(std::size_t n = 0; n < n_max_; ++n) s.levels[n] += (h / 6.0) * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]);
      require_finite(s, "bdlp evolution");
    }
    s.t = k0.t + t;
    return s;
  }

private:
  BdlpTables t_;
  std::size_t n_max_;
  Closure closure_;
  std::vector<Eigen::VectorXd> load_;
};

inline HierarchyState evolve_correlations_bdlp(const HierarchyState& k0, double t, std::size_t steps,
                                               const BdlpModel& model, Closure closure = Closure::kZero) {
  return BdlpHierarchy(tabulate(model), k0.n_max(), closure).evolve(k0, t, steps);
}

// ---------------------------------------------------------------------------
// Sub-Poissonian envelope |k_t| <= A e^{B t} C^n e^{alpha sum s}.

// max over levels and entries of |k(v)| / (C^n e^{alpha sum s(v)}).
inline double subpoisson_ratio(const HierarchyState& s, const GridSpec& grid, const WeightedNormParams& p) {
  double worst = 0.0;
  std::vector<std::size_t> digits;
  for(std::size_t n = 1; n <= s.n_max(); ++n) {
    const auto& x = s.level(n);
    const double cn = std::pow(p.C, static_cast<double>(n));
    for(Eigen::Index i = 0; i < x.size(); ++i) {
      decode_index(static_cast<std::size_t>(i), s.nodes, n, digits);
      double mass = 0.0;
      for(auto d: digits) mass += grid.node(d).mark;
      worst = std::max(worst, std::abs(x[i]) / (cn * std::exp(p.alpha * mass)));
    }
  }
  return worst;
}

struct SubPoissonFit {
  std::vector<double> times;
  std::vector<double> ratios;
  double A = 0.0;
  double B = 0.0;
  double max_positive_residual = 0.0; // in log r
  double A_envelope = 0.0;            // A e^{max residual}: bound holds at every sample time
};

inline SubPoissonFit subpoisson_fit(const std::vector<HierarchyState>& trajectory, const GridSpec& grid,
                                    const WeightedNormParams& p) {
  SubPoissonFit f;
  for(const auto& s: trajectory) {
    f.times.push_back(s.t);
    f.ratios.push_back(subpoisson_ratio(s, grid, p));
  }
  const std::size_t n = f.times.size();
  if(n == 0) throw std::invalid_argument("empty trajectory");
  std::vector<double> y(n);
  for(std::size_t i = 0; i < n; ++i) {
    if(!(f.ratios[i] > 0.0)) throw std::invalid_argument("subpoisson_fit: zero correlation state");
    y[i] = std::log(f.ratios[i]);
  }
  double tm = 0.0;
  double ym = 0.0;
  for(std::size_t i = 0; i < n; ++i) {
    tm += f.times[i];
    ym += y[i];
  }
  tm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for(std::size_t i = 0; i < n; ++i) {
    sxy += (f.times[i] - tm) * (y[i] - ym);
    sxx += (f.times[i] - tm) * (f.times[i] - tm);
  }
  f.B = sxx > 0.0 ? sxy / sxx : 0.0;
  const double a = ym - f.B * tm;
  f.A = std::exp(a);
  for(std::size_t i = 0; i < n; ++i) f.max_positive_residual = std::max(f.max_positive_residual, y[i] - (a + f.B * f.times[i]));
  f.A_envelope = f.A * std::exp(f.max_positive_residual);
  return f;
}

} // namespace drm

#endif // DRM_BDLP_HPP
