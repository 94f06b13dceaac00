#ifndef DRM_COMBINATORIAL_FUNCTION_HPP
#define DRM_COMBINATORIAL_FUNCTION_HPP

#include "drm/cone.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>

namespace drm {

using MeasureFunction = std::function<double(AtomSpan)>;
using MarkedFunction = std::function<double(double mark, const Position& x)>;

// Bounded support of a B_bs element: atoms in box x [mark_lo, mark_hi], at
// most max_atoms of them, and |G| <= bound there.
struct SupportWindow {
  Box box;
  double mark_lo = 0.0;
  double mark_hi = 0.0;
  std::size_t max_atoms = 0;
  double bound = 1.0;

  bool admits(AtomSpan atoms) const noexcept {
    if(atoms.size() > max_atoms) return false;
    for(const auto& a: atoms) {
      if(a.mark < mark_lo || a.mark > mark_hi || !box.contains(a.position)) return false;
    }
    return true;
  }
};

// A function G on K_0(X), evaluated on atom lists. With a window attached the
// function is forced to vanish off the window.
//
// accepts_coincident marks functions whose symmetric components G^(n) extend
// naturally to tuples with coincident positions (products over atoms such as
// e_lambda). Lebesgue-Poisson sums that keep repeated grid nodes pass such
// tuples unmerged; all other functions see the mark-summed measure.
class CombinatorialFunction {
public:
  CombinatorialFunction() : eval_([](AtomSpan) { return 0.0; }) {}
  explicit CombinatorialFunction(MeasureFunction eval, std::optional<SupportWindow> window = std::nullopt,
                                 bool accepts_coincident = false)
      : eval_(std::move(eval)), window_(std::move(window)), accepts_coincident_(accepts_coincident) {
    if(!eval_) throw std::invalid_argument("CombinatorialFunction: empty evaluator");
  }

  double operator()(AtomSpan atoms) const {
    if(window_ && !window_->admits(atoms)) return 0.0;
    return eval_(atoms);
  }
  double operator()(const FiniteMeasure& eta) const { return (*this)(eta.atoms()); }

  const std::optional<SupportWindow>& window() const noexcept { return window_; }
  bool accepts_coincident() const noexcept { return accepts_coincident_; }

private:
  MeasureFunction eval_;
  std::optional<SupportWindow> window_;
  bool accepts_coincident_ = false;
};

// Indicator of {eta = 0}.
inline CombinatorialFunction zero_indicator() {
  return CombinatorialFunction([](AtomSpan atoms) { return atoms.empty() ? 1.0 : 0.0; });
}

inline CombinatorialFunction constant_function(double c) {
  return CombinatorialFunction([c](AtomSpan) { return c; }, std::nullopt, true);
}

// Lebesgue-Poisson exponent e_lambda(f, eta) = prod_{y in tau(eta)} f(s_y, y), e_lambda(f, 0) = 1.
inline double lp_exponent(const MarkedFunction& f, AtomSpan atoms) {
  double p = 1.0;
  for(const auto& a: atoms) p *= f(a.mark, a.position);
  return p;
}
inline double lp_exponent(const MarkedFunction& f, const FiniteMeasure& eta) { return lp_exponent(f, eta.atoms()); }

inline CombinatorialFunction lp_exponent_function(MarkedFunction f) {
  return CombinatorialFunction([f = std::move(f)](AtomSpan atoms) { return lp_exponent(f, atoms); }, std::nullopt,
                               true);
}

inline CombinatorialFunction product(CombinatorialFunction a, CombinatorialFunction b) {
  const bool coincident = a.accepts_coincident() && b.accepts_coincident();
  return CombinatorialFunction([a = std::move(a), b = std::move(b)](AtomSpan atoms) { return a(atoms) * b(atoms); },
                               std::nullopt, coincident);
}

inline CombinatorialFunction absolute(CombinatorialFunction a) {
  const bool coincident = a.accepts_coincident();
  return CombinatorialFunction([a = std::move(a)](AtomSpan atoms) { return std::abs(a(atoms)); }, std::nullopt,
                               coincident);
}

} // namespace drm

#endif // DRM_COMBINATORIAL_FUNCTION_HPP
