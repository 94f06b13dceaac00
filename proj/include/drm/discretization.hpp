#ifndef DRM_DISCRETIZATION_HPP
#define DRM_DISCRETIZATION_HPP

// Quadrature discretization of the intensity nu (x) sigma on a mark window
// [a, b] x box, and truncated Lebesgue-Poisson integration against it.
//
// The discretized intensity rho = sum_v W_v delta_{(s_v, x_v)} charges the
// product nodes, so the discretized Lebesgue-Poisson measure
// sum_n rho^{(x)n} / n! also charges tuples with a repeated spatial node. The
// grid's RepeatedNodes policy fixes how those are treated:
//   kExclude  the tuples are dropped; integrals become sums over sets of nodes
//             with distinct positions, where Minlos-type identities are exact.
//   kInclude  the tuples are kept; marks at a shared position are summed into
//             one atom, unless the integrand accepts coincident atoms.

#include "drm/combinatorial_function.hpp"
#include "drm/cone.hpp"
#include "drm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace drm {

// Gauss-Legendre nodes and weights on [-1, 1], ascending.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendreRule gauss_legendre(std::size_t n) {
  if(n == 0) throw std::invalid_argument("gauss_legendre: need at least one node");
  GaussLegendreRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const double nd = static_cast<double>(n);
  for(std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
    double dp = 1.0;
    for(int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for(std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * x * p2 - (j - 1.0) * p3) / static_cast<double>(j);
      }
      dp = nd * (x * p1 - p2) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if(std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

// Gamma-process Levy density nu_theta(ds)/ds = theta e^{-s} / s.
inline double nu_theta_density(double s, double theta) {
  if(!(s > 0.0)) throw std::domain_error("nu_theta_density: mark must be positive");
  if(!(theta > 0.0)) throw std::domain_error("nu_theta_density: theta must be positive");
  return theta * std::exp(-s) / s;
}

// Density of nu on (0, inf): either nu_theta or a tabulated density with
// linear interpolation (zero outside the table).
class MarkDensity {
public:
  static MarkDensity gamma(double theta) {
    if(!(theta > 0.0)) throw std::invalid_argument("MarkDensity: theta must be positive");
    MarkDensity d;
    d.theta_ = theta;
    return d;
  }
  static MarkDensity tabulated(std::vector<double> s, std::vector<double> values) {
    if(s.size() < 2 || s.size() != values.size()) {
      throw std::invalid_argument("MarkDensity: table needs >= 2 matching (s, density) entries");
    }
    for(std::size_t i = 0; i < s.size(); ++i) {
      if(!(s[i] > 0.0) || values[i] < 0.0 || (i > 0 && !(s[i] > s[i - 1]))) {
        throw std::invalid_argument("MarkDensity: table marks must be positive and increasing, densities >= 0");
      }
    }
    MarkDensity d;
    d.table_s_ = std::move(s);
    d.table_v_ = std::move(values);
    return d;
  }

  bool is_gamma() const noexcept { return table_s_.empty(); }
  double theta() const noexcept { return theta_; }

  double operator()(double s) const {
    if(is_gamma()) return nu_theta_density(s, theta_);
    if(s < table_s_.front() || s > table_s_.back()) return 0.0;
    const auto it = std::upper_bound(table_s_.begin(), table_s_.end(), s);
    const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - table_s_.begin()), table_s_.size() - 1);
    const std::size_t lo = hi - 1;
    const double t = (s - table_s_[lo]) / (table_s_[hi] - table_s_[lo]);
    return (1.0 - t) * table_v_[lo] + t * table_v_[hi];
  }

private:
  double theta_ = 0.0;
  std::vector<double> table_s_;
  std::vector<double> table_v_;
};

struct MarkGrid {
  double a = 0.0;
  double b = 0.0;
  double theta = 0.0; // 0 when nu is tabulated
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
  double total_weight() const noexcept { return pairwise_sum(weights); }
};

// Gauss-Legendre in u = log s on [log a, log b]; nu(ds) = s * density(s) du.
inline MarkGrid build_mark_grid(double a, double b, std::size_t n, const MarkDensity& density) {
  if(!(a > 0.0)) throw std::invalid_argument("build_mark_grid: mark window must start above 0");
  if(!(b > a)) throw std::invalid_argument("build_mark_grid: mark window needs b > a");
  if(n == 0) throw std::invalid_argument("build_mark_grid: need at least one mark node");
  MarkGrid g;
  g.a = a;
  g.b = b;
  g.theta = density.is_gamma() ? density.theta() : 0.0;
  const double ua = std::log(a);
  const double ub = std::log(b);
  const double half = 0.5 * (ub - ua);
  const double mid = 0.5 * (ub + ua);
  const auto rule = gauss_legendre(n);
  for(std::size_t j = 0; j < n; ++j) {
    const double s = std::exp(mid + half * rule.nodes[j]);
    const double w = half * rule.weights[j] * s * density(s);
    if(!(w > 0.0)) throw std::invalid_argument("build_mark_grid: density vanishes at a node");
    g.nodes.push_back(s);
    g.weights.push_back(w);
  }
  return g;
}

struct SpaceGrid {
  Box box;
  std::vector<std::size_t> counts; // nodes per dimension
  std::vector<Position> nodes;     // lexicographic order
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
  double total_weight() const noexcept { return pairwise_sum(weights); }

  // x - y on the torus obtained by identifying opposite faces of the box
  // (minimal image per coordinate).
  Position periodic_displacement(const Position& x, const Position& y) const noexcept {
    Position d = x;
    for(std::size_t i = 0; i < x.dim(); ++i) {
      const double len = box.hi[i] - box.lo[i];
      double di = x[i] - y[i];
      di -= len * std::round(di / len);
      d[i] = di;
    }
    return d;
  }
};

// Midpoint rule on a uniform cell partition of the box; sigma = density * Lebesgue.
inline SpaceGrid build_space_grid(const Box& box, std::vector<std::size_t> counts, double sigma_density = 1.0) {
  box.validate();
  if(counts.size() != box.dim()) throw std::invalid_argument("build_space_grid: one node count per dimension");
  if(!(sigma_density > 0.0)) throw std::invalid_argument("build_space_grid: sigma density must be positive");
  for(auto c: counts) {
    if(c == 0) throw std::invalid_argument("build_space_grid: node counts must be positive");
  }
  SpaceGrid g;
  g.box = box;
  g.counts = counts;
  std::size_t total = 1;
  double cell = sigma_density;
  for(std::size_t i = 0; i < counts.size(); ++i) {
    total *= counts[i];
    cell *= (box.hi[i] - box.lo[i]) / static_cast<double>(counts[i]);
  }
  std::vector<std::size_t> idx(counts.size(), 0);
  for(std::size_t k = 0; k < total; ++k) {
    std::size_t rem = k;
    for(std::size_t i = counts.size(); i-- > 0;) {
      idx[i] = rem % counts[i];
      rem /= counts[i];
    }
    Position p = box.lo;
    for(std::size_t i = 0; i < counts.size(); ++i) {
      const double h = (box.hi[i] - box.lo[i]) / static_cast<double>(counts[i]);
      p[i] = box.lo[i] + (static_cast<double>(idx[i]) + 0.5) * h;
    }
    g.nodes.push_back(p);
    g.weights.push_back(cell);
  }
  return g;
}

enum class RepeatedNodes { kExclude, kInclude };

struct GridConfig {
  double mark_lo = 0.1;
  double mark_hi = 5.0;
  double theta = 1.0;
  std::vector<double> nu_table_s;      // optional tabulated nu density
  std::vector<double> nu_table_values;
  std::size_t mark_nodes = 4;
  Box box{Position(0.0), Position(1.0)};
  std::vector<std::size_t> space_nodes{4};
  double sigma_density = 1.0;
  bool exclude_repeated_nodes = true;
};

// Product grid of (mark, position) nodes. Node v = i * M + j pairs space node
// i with mark node j, so nodes sharing a position are consecutive.
class GridSpec {
public:
  GridSpec() = default;
  GridSpec(MarkGrid marks, SpaceGrid space, RepeatedNodes policy)
      : marks_(std::move(marks)), space_(std::move(space)), policy_(policy) {
    const std::size_t M = marks_.size();
    for(std::size_t i = 0; i < space_.size(); ++i) {
      for(std::size_t j = 0; j < M; ++j) {
        atoms_.push_back(Atom{marks_.nodes[j], space_.nodes[i]});
        weights_.push_back(marks_.weights[j] * space_.weights[i]);
      }
    }
  }

  const MarkGrid& marks() const noexcept { return marks_; }
  const SpaceGrid& space() const noexcept { return space_; }
  RepeatedNodes policy() const noexcept { return policy_; }
  bool excludes_repeated() const noexcept { return policy_ == RepeatedNodes::kExclude; }

  std::size_t size() const noexcept { return atoms_.size(); }
  std::size_t mark_count() const noexcept { return marks_.size(); }
  std::size_t space_count() const noexcept { return space_.size(); }
  const Atom& node(std::size_t v) const noexcept { return atoms_[v]; }
  double weight(std::size_t v) const noexcept { return weights_[v]; }
  std::size_t space_index(std::size_t v) const noexcept { return v / marks_.size(); }
  std::size_t mark_index(std::size_t v) const noexcept { return v % marks_.size(); }
  const std::vector<double>& weights() const noexcept { return weights_; }

  // m = sum_v W_v, the discrete (nu (x) sigma)-mass of the window.
  double total_mass() const noexcept { return pairwise_sum(weights_); }

  GridSpec with_policy(RepeatedNodes policy) const {
    GridSpec g = *this;
    g.policy_ = policy;
    return g;
  }

private:
  MarkGrid marks_;
  SpaceGrid space_;
  RepeatedNodes policy_ = RepeatedNodes::kExclude;
  std::vector<Atom> atoms_;
  std::vector<double> weights_;
};

inline GridSpec build_grid(const GridConfig& cfg) {
  const MarkDensity density = cfg.nu_table_s.empty() ? MarkDensity::gamma(cfg.theta)
                                                     : MarkDensity::tabulated(cfg.nu_table_s, cfg.nu_table_values);
  auto marks = build_mark_grid(cfg.mark_lo, cfg.mark_hi, cfg.mark_nodes, density);
  auto space = build_space_grid(cfg.box, cfg.space_nodes, cfg.sigma_density);
  return GridSpec(std::move(marks), std::move(space),
                  cfg.exclude_repeated_nodes ? RepeatedNodes::kExclude : RepeatedNodes::kInclude);
}

// ---------------------------------------------------------------------------
// Enumeration of the discretized Lebesgue-Poisson measure.

namespace detail {

inline bool occupies(AtomSpan atoms, const Position& x) noexcept {
  for(const auto& a: atoms) {
    if(a.position == x) return true;
  }
  return false;
}

// Depth-first walk over node sets (kExclude) or node multisets (kInclude)
// whose first node is `first`; visit(atoms, n, weight) is called for every
// configuration with 1 <= n <= n_max, where weight is the discrete LP weight
// prod W_v^{k_v} / k_v!.
template<typename Visit>
class LpWalker {
public:
  LpWalker(const GridSpec& grid, std::size_t n_max, bool raw_tuples, Visit& visit)
      : grid_(grid), n_max_(n_max), raw_(raw_tuples), visit_(visit) {
    buffer_.reserve(n_max + 1);
  }

  void run_from(std::size_t first) {
    if(n_max_ == 0) return;
    if(grid_.excludes_repeated()) {
      push_set(first, 1, grid_.weight(first));
    } else {
      push_multiset(first, 1, 1, grid_.weight(first));
    }
  }

private:
  void push_set(std::size_t v, std::size_t n, double w) {
    buffer_.push_back(grid_.node(v));
    visit_(AtomSpan(buffer_), n, w);
    if(n < n_max_) {
      const std::size_t M = grid_.mark_count();
      const std::size_t start = (grid_.space_index(v) + 1) * M;
      for(std::size_t u = start; u < grid_.size(); ++u) push_set(u, n + 1, w * grid_.weight(u));
    }
    buffer_.pop_back();
  }

  // mult = multiplicity of node v in the current multiset.
  void push_multiset(std::size_t v, std::size_t n, std::size_t mult, double w) {
    const Atom& node = grid_.node(v);
    bool merged = false;
    double saved = 0.0;
    if(!raw_ && !buffer_.empty() && buffer_.back().position == node.position) {
      saved = buffer_.back().mark;
      buffer_.back().mark += node.mark;
      merged = true;
    } else {
      buffer_.push_back(node);
    }
    visit_(AtomSpan(buffer_), n, w);
    if(n < n_max_) {
      push_multiset(v, n + 1, mult + 1, w * grid_.weight(v) / static_cast<double>(mult + 1));
      for(std::size_t u = v + 1; u < grid_.size(); ++u) push_multiset(u, n + 1, 1, w * grid_.weight(u));
    }
    if(merged) {
      buffer_.back().mark = saved;
    } else {
      buffer_.pop_back();
    }
  }

  const GridSpec& grid_;
  std::size_t n_max_;
  bool raw_;
  Visit& visit_;
  std::vector<Atom> buffer_;
};

} // namespace detail

// Calls visit(atoms, n, weight) for every configuration of the discretized
// Lebesgue-Poisson measure with at most n_max atoms, including the empty one
// (n = 0, weight 1). Work is split in one block per first node; block_done(b)
// is invoked after block b (block 0 is the empty configuration) and visit must
// only touch per-block state indexed by the block argument.
template<typename BlockVisit>
void for_each_lp_configuration_blocked(const GridSpec& grid, std::size_t n_max, bool raw_tuples, BlockVisit&& visit) {
  parallel_blocks(grid.size() + 1, [&](std::size_t block) {
    if(block == 0) {
      visit(block, AtomSpan{}, std::size_t{0}, 1.0);
      return;
    }
    auto local = [&](AtomSpan atoms, std::size_t n, double w) { visit(block, atoms, n, w); };
    detail::LpWalker<decltype(local)> walker(grid, n_max, raw_tuples, local);
    walker.run_from(block - 1);
  });
}

// Sequential variant, in the same deterministic order.
template<typename Visit>
void for_each_lp_configuration(const GridSpec& grid, std::size_t n_max, bool raw_tuples, Visit&& visit) {
  visit(AtomSpan{}, std::size_t{0}, 1.0);
  detail::LpWalker<std::remove_reference_t<Visit>> walker(grid, n_max, raw_tuples, visit);
  for(std::size_t v = 0; v < grid.size(); ++v) walker.run_from(v);
}

struct LpResult {
  double value = 0.0;
  double error_estimate = 0.0; // |n_max-th term|
  std::vector<double> terms;   // terms[n] = contribution of n-atom configurations
};

inline constexpr std::size_t kDefaultLpTruncation = 20;

// Truncated integral G(0) + sum_{n=1}^{n_max} (1/n!) sum_{tuples} G^(n) prod W.
template<typename F>
LpResult lp_integrate(const F& g, const GridSpec& grid, std::size_t n_max, bool raw_tuples = false) {
  std::vector<std::vector<double>> partial(grid.size() + 1, std::vector<double>(n_max + 1, 0.0));
  for_each_lp_configuration_blocked(grid, n_max, raw_tuples, [&](std::size_t block, AtomSpan atoms, std::size_t n, double w) {
    partial[block][n] += static_cast<double>(g(atoms)) * w;
  });
  LpResult r;
  r.terms.assign(n_max + 1, 0.0);
  std::vector<double> column(partial.size());
  for(std::size_t n = 0; n <= n_max; ++n) {
    for(std::size_t b = 0; b < partial.size(); ++b) column[b] = partial[b][n];
    r.terms[n] = pairwise_sum(column);
  }
  for(std::size_t n = 0; n <= n_max; ++n) r.value += r.terms[n];
  r.error_estimate = std::abs(r.terms[n_max]);
  return r;
}

inline LpResult lp_integrate(const CombinatorialFunction& g, const GridSpec& grid,
                             std::size_t n_max = kDefaultLpTruncation) {
  return lp_integrate(g, grid, n_max, g.accepts_coincident());
}

// Quadrature over the product nodes for an atom inserted next to `occupied`:
// calls fn(node, W_v) for every node, skipping nodes at an occupied position
// when the grid excludes repeated nodes.
template<typename Fn>
void for_each_free_node(const GridSpec& grid, AtomSpan occupied, Fn&& fn) {
  const bool exclude = grid.excludes_repeated();
  const std::size_t M = grid.mark_count();
  for(std::size_t i = 0; i < grid.space_count(); ++i) {
    const Position& x = grid.space().nodes[i];
    if(exclude && detail::occupies(occupied, x)) continue;
    for(std::size_t j = 0; j < M; ++j) {
      const std::size_t v = i * M + j;
      fn(grid.node(v), grid.weight(v));
    }
  }
}

// Result of add_atom: index of the atom that received the mass and its
// previous mark (negative when the atom was appended).
struct AddedAtom {
  std::size_t index = 0;
  double previous_mark = -1.0;
};

// Adds atom to buffer, summing its mark into an existing atom at the same
// position (measure addition).
inline AddedAtom add_atom(std::vector<Atom>& buffer, const Atom& atom) {
  for(std::size_t i = 0; i < buffer.size(); ++i) {
    if(buffer[i].position == atom.position) {
      AddedAtom r{i, buffer[i].mark};
      buffer[i].mark += atom.mark;
      return r;
    }
  }
  buffer.push_back(atom);
  return AddedAtom{buffer.size() - 1, -1.0};
}

// Copy of atoms plus one atom, kept in canonical (position) order; an atom
// already at that position gains the mark.
inline void assign_with_atom(std::vector<Atom>& out, AtomSpan atoms, const Atom& extra) {
  out.clear();
  bool placed = false;
  for(const auto& a: atoms) {
    if(!placed && extra.position <= a.position) {
      if(extra.position == a.position) {
        out.push_back(Atom{a.mark + extra.mark, a.position});
        placed = true;
        continue;
      }
      out.push_back(extra);
      placed = true;
    }
    out.push_back(a);
  }
  if(!placed) out.push_back(extra);
}

// Copy of atoms without entry `skip`.
inline void assign_without(std::vector<Atom>& out, AtomSpan atoms, std::size_t skip) {
  out.clear();
  for(std::size_t i = 0; i < atoms.size(); ++i) {
    if(i != skip) out.push_back(atoms[i]);
  }
}

// Exact undo for add_atom.
inline void remove_added_atom(std::vector<Atom>& buffer, const AddedAtom& added) {
  if(added.previous_mark < 0.0) {
    buffer.pop_back();
  } else {
    buffer[added.index].mark = added.previous_mark;
  }
}

} // namespace drm

#endif // DRM_DISCRETIZATION_HPP
