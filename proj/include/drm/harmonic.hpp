#ifndef DRM_HARMONIC_HPP
#define DRM_HARMONIC_HPP

// K-transform calculus on finite measures: K, its Moebius inverse, the
// star-convolution, Lebesgue-Poisson pairings and the two Minlos identities
// on the discretized Lebesgue-Poisson measure.

#include "drm/combinatorial_function.hpp"
#include "drm/cone.hpp"
#include "drm/discretization.hpp"
#include "drm/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <vector>

namespace drm {

inline constexpr std::size_t kMaxStarConvolutionAtoms = 18;

namespace detail {

inline void fill_sub_measure(AtomSpan atoms, std::uint64_t mask, std::vector<Atom>& out) {
  out.clear();
  for(std::size_t i = 0; i < atoms.size(); ++i) {
    if(mask >> i & 1U) out.push_back(atoms[i]);
  }
}

} // namespace detail

// (KG)(eta) = sum over sub-measures xi of eta of G(xi).
template<typename G>
double k_transform(const G& g, AtomSpan eta) {
  check_enumeration_budget(eta.size(), kMaxEnumerationAtoms, "k_transform");
  std::vector<Atom> xi;
  xi.reserve(eta.size());
  double sum = 0.0;
  const std::uint64_t count = std::uint64_t{1} << eta.size();
  for(std::uint64_t mask = 0; mask < count; ++mask) {
    detail::fill_sub_measure(eta, mask, xi);
    sum += g(AtomSpan(xi));
  }
  return sum;
}
template<typename G>
double k_transform(const G& g, const FiniteMeasure& eta) { return k_transform(g, eta.atoms()); }

// (K^{-1}F)(eta) = sum_{xi subset eta} (-1)^{|tau(eta)| - |tau(xi)|} F(xi).
template<typename F>
double k_inverse(const F& f, AtomSpan eta) {
  check_enumeration_budget(eta.size(), kMaxEnumerationAtoms, "k_inverse");
  std::vector<Atom> xi;
  xi.reserve(eta.size());
  double sum = 0.0;
  const std::size_t n = eta.size();
  const std::uint64_t count = std::uint64_t{1} << n;
  for(std::uint64_t mask = 0; mask < count; ++mask) {
    detail::fill_sub_measure(eta, mask, xi);
    const bool odd = ((n - static_cast<std::size_t>(std::popcount(mask))) & 1U) != 0;
    const double v = f(AtomSpan(xi));
    sum += odd ? -v : v;
  }
  return sum;
}
template<typename F>
double k_inverse(const F& f, const FiniteMeasure& eta) { return k_inverse(f, eta.atoms()); }

// Function wrappers, so that K and K^{-1} compose.
template<typename G>
CombinatorialFunction k_transform_function(G g) {
  return CombinatorialFunction([g = std::move(g)](AtomSpan atoms) { return k_transform(g, atoms); });
}
template<typename F>
CombinatorialFunction k_inverse_function(F f) {
  return CombinatorialFunction([f = std::move(f)](AtomSpan atoms) { return k_inverse(f, atoms); });
}

// (G1 * G2)(eta) = sum over eta = xi1 + xi2 + xi3 (disjoint supports) of
// G1(xi1 + xi2) G2(xi2 + xi3): every atom gets one of three colours.
template<typename G1, typename G2>
double star_convolution(const G1& g1, const G2& g2, AtomSpan eta) {
  check_enumeration_budget(eta.size(), kMaxStarConvolutionAtoms, "star_convolution");
  const std::size_t n = eta.size();
  std::vector<std::uint8_t> colour(n, 0);
  std::vector<Atom> left;
  std::vector<Atom> right;
  left.reserve(n);
  right.reserve(n);
  double sum = 0.0;
  for(;;) {
    left.clear();
    right.clear();
    for(std::size_t i = 0; i < n; ++i) {
      if(colour[i] <= 1) left.push_back(eta[i]);
      if(colour[i] >= 1) right.push_back(eta[i]);
    }
    sum += g1(AtomSpan(left)) * g2(AtomSpan(right));
    std::size_t i = 0;
    while(i < n && colour[i] == 2) colour[i++] = 0;
    if(i == n) break;
    ++colour[i];
  }
  return sum;
}
template<typename G1, typename G2>
double star_convolution(const G1& g1, const G2& g2, const FiniteMeasure& eta) {
  return star_convolution(g1, g2, eta.atoms());
}

struct IdentityResidual {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_diff = 0.0;

  // |lhs - rhs| / max(|lhs|, |rhs|); zero when both sides vanish.
  double relative() const noexcept {
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    return scale == 0.0 ? abs_diff : abs_diff / scale;
  }
};

inline IdentityResidual make_residual(double lhs, double rhs) { return {lhs, rhs, std::abs(lhs - rhs)}; }

namespace detail {

struct StoredConfiguration {
  std::vector<Atom> atoms;
  std::vector<std::uint64_t> space_mask;
  double weight = 0.0;
};

inline std::vector<StoredConfiguration> collect_configurations(const GridSpec& grid, std::size_t n_max) {
  std::vector<StoredConfiguration> out;
  const std::size_t words = (grid.space_count() + 63) / 64;
  // Positions in grid order let us recover space indices cheaply.
  const auto& nodes = grid.space().nodes;
  for_each_lp_configuration(grid, n_max, false, [&](AtomSpan atoms, std::size_t, double w) {
    StoredConfiguration c;
    c.atoms.assign(atoms.begin(), atoms.end());
    c.space_mask.assign(words, 0);
    for(const auto& a: atoms) {
      const auto it = std::lower_bound(nodes.begin(), nodes.end(), a.position);
      const auto i = static_cast<std::size_t>(it - nodes.begin());
      c.space_mask[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    c.weight = w;
    out.push_back(std::move(c));
  });
  return out;
}

inline bool disjoint(const StoredConfiguration& a, const StoredConfiguration& b) noexcept {
  for(std::size_t w = 0; w < a.space_mask.size(); ++w) {
    if(a.space_mask[w] & b.space_mask[w]) return false;
  }
  return true;
}

} // namespace detail

// Minlos identity, first part:
//   int int G(xi1 + xi2) H(xi1, xi2) dlambda dlambda
//     = int G(eta) sum_{xi subset eta} H(xi, eta - xi) dlambda.
// Both sides use the same truncation: at most n_max atoms in xi1 + xi2 and in
// eta. Under kExclude, pairs sharing a grid position are dropped, which is the
// same repeated-node policy the right side sees.
template<typename G, typename H>
IdentityResidual minlos_check_1(const G& g, const H& h, const GridSpec& grid, std::size_t n_max) {
  const auto configs = detail::collect_configurations(grid, n_max);
  const bool exclude = grid.excludes_repeated();
  std::vector<double> partial(configs.size(), 0.0);
  parallel_blocks(configs.size(), [&](std::size_t i) {
    const auto& c1 = configs[i];
    std::vector<Atom> joint;
    double acc = 0.0;
    for(const auto& c2: configs) {
      if(c1.atoms.size() + c2.atoms.size() > n_max) continue;
      if(exclude && !detail::disjoint(c1, c2)) continue;
      joint = c1.atoms;
      for(const auto& a: c2.atoms) add_atom(joint, a);
      acc += g(AtomSpan(joint)) * h(AtomSpan(c1.atoms), AtomSpan(c2.atoms)) * c1.weight * c2.weight;
    }
    partial[i] = acc;
  });
  const double lhs = pairwise_sum(partial);

  const auto rhs = lp_integrate(
      [&](AtomSpan eta) {
        const double gv = g(eta);
        if(gv == 0.0) return 0.0;
        std::vector<Atom> xi;
        std::vector<Atom> rest;
        double inner = 0.0;
        const std::uint64_t count = std::uint64_t{1} << eta.size();
        for(std::uint64_t mask = 0; mask < count; ++mask) {
          detail::fill_sub_measure(eta, mask, xi);
          detail::fill_sub_measure(eta, ~mask & (count - 1), rest);
          inner += h(AtomSpan(xi), AtomSpan(rest));
        }
        return gv * inner;
      },
      grid, n_max);
  return make_residual(lhs, rhs.value);
}

// Minlos identity, second part:
//   int sum_{x in tau(eta)} H(eta, s_x, x) dlambda
//     = int int H(eta + s delta_x, s, x) nu(ds) sigma(dx) dlambda.
// The right side integrates eta up to n_max - 1 atoms so that both sides see
// configurations of at most n_max atoms.
template<typename H>
IdentityResidual minlos_check_2(const H& h, const GridSpec& grid, std::size_t n_max) {
  const auto lhs = lp_integrate(
      [&](AtomSpan eta) {
        double s = 0.0;
        for(const auto& a: eta) s += h(eta, a.mark, a.position);
        return s;
      },
      grid, n_max);
  if(n_max == 0) return make_residual(lhs.value, 0.0);
  const auto rhs = lp_integrate(
      [&](AtomSpan eta) {
        std::vector<Atom> buffer(eta.begin(), eta.end());
        double s = 0.0;
        for_each_free_node(grid, eta, [&](const Atom& node, double w) {
          const auto added = add_atom(buffer, node);
          s += h(AtomSpan(buffer), node.mark, node.position) * w;
          remove_added_atom(buffer, added);
        });
        return s;
      },
      grid, n_max - 1);
  return make_residual(lhs.value, rhs.value);
}

// <G, k>_lambda = int G k dlambda.
template<typename G, typename K>
double correlation_pairing(const G& g, const K& k, const GridSpec& grid, std::size_t n_max) {
  return lp_integrate([&](AtomSpan eta) { return g(eta) * k(eta); }, grid, n_max).value;
}

struct GrowthCheck {
  bool holds = true;
  double max_ratio = 0.0; // max |KG(eta)| / (C 2^N (1 + |tau(eta) cap Lambda|)^N)
  double constant = 0.0;  // C 2^N
};

// |KG(eta)| <= C 2^N (1 + |tau(eta) cap Lambda|)^N for a G with window (C, Lambda, N, I).
inline GrowthCheck kg_growth_check(const CombinatorialFunction& g, const std::vector<FiniteMeasure>& samples) {
  if(!g.window()) throw std::invalid_argument("kg_growth_check: function carries no support window");
  const auto& w = *g.window();
  GrowthCheck out;
  const double n = static_cast<double>(w.max_atoms);
  out.constant = w.bound * std::pow(2.0, n);
  for(const auto& eta: samples) {
    std::size_t inside = 0;
    for(const auto& a: eta.atoms()) {
      if(w.box.contains(a.position)) ++inside;
    }
    const double bound = out.constant * std::pow(1.0 + static_cast<double>(inside), n);
    const double ratio = std::abs(k_transform(g, eta)) / bound;
    out.max_ratio = std::max(out.max_ratio, ratio);
    if(ratio > 1.0) out.holds = false;
  }
  return out;
}

// Restriction of eta to the window's box and mark interval.
inline FiniteMeasure window_restriction(const FiniteMeasure& eta, const SupportWindow& w) {
  std::vector<Atom> kept;
  for(const auto& a: eta.atoms()) {
    if(w.box.contains(a.position) && a.mark >= w.mark_lo && a.mark <= w.mark_hi) kept.push_back(a);
  }
  return FiniteMeasure(std::move(kept));
}

// ---------------------------------------------------------------------------
// Seeded pseudo-random functions. Values come from a hash of the atoms that
// does not depend on their order, so the functions are symmetric and
// reproducible for any argument.

namespace detail {

inline std::uint64_t double_bits(double x) noexcept {
  if(x == 0.0) x = 0.0; // fold -0
  std::uint64_t b = 0;
  std::memcpy(&b, &x, sizeof b);
  return b;
}

inline std::uint64_t atom_hash(const Atom& a) noexcept {
  std::uint64_t h = splitmix64(double_bits(a.mark));
  for(std::size_t i = 0; i < a.position.dim(); ++i) h = splitmix64(h ^ double_bits(a.position[i]));
  return h;
}

inline std::uint64_t measure_hash(std::uint64_t seed, AtomSpan atoms) noexcept {
  std::uint64_t h = 0;
  for(const auto& a: atoms) h += splitmix64(atom_hash(a) ^ seed);
  return splitmix64(h ^ splitmix64(seed + atoms.size()));
}

inline double unit_interval(std::uint64_t h) noexcept { return static_cast<double>(h >> 11) * 0x1.0p-53; }

} // namespace detail

// G(eta) uniform in [lo, hi], independently for each eta.
inline CombinatorialFunction random_function(std::uint64_t seed, double lo = -1.0, double hi = 1.0,
                                             std::optional<SupportWindow> window = std::nullopt) {
  return CombinatorialFunction(
      [seed, lo, hi](AtomSpan atoms) { return lo + (hi - lo) * detail::unit_interval(detail::measure_hash(seed, atoms)); },
      std::move(window));
}

// f(s, x) uniform in [lo, hi], independently for each (s, x).
inline MarkedFunction random_marked_function(std::uint64_t seed, double lo, double hi) {
  return [seed, lo, hi](double s, const Position& x) {
    return lo + (hi - lo) * detail::unit_interval(splitmix64(detail::atom_hash(Atom{s, x}) ^ splitmix64(seed)));
  };
}

// H(xi1, xi2) uniform in [lo, hi] for each ordered pair.
inline auto random_pair_function(std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return [seed, lo, hi](AtomSpan a, AtomSpan b) {
    const std::uint64_t h = splitmix64(detail::measure_hash(seed, a) * 0x9E3779B97F4A7C15ULL ^
                                       detail::measure_hash(seed + 1, b));
    return lo + (hi - lo) * detail::unit_interval(h);
  };
}

} // namespace drm

#endif // DRM_HARMONIC_HPP
