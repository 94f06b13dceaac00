#ifndef DRM_CONE_HPP
#define DRM_CONE_HPP

// Finite discrete Radon measures eta = sum_i s_i delta_{x_i}, their atoms and
// sub-measures, and the bijection with pinpointing marked configurations.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace drm {

inline constexpr std::size_t kMaxDim = 3;

// A point of X = R^d, d <= kMaxDim. Unused trailing coordinates are zero so
// that comparison is well defined across points of the same dimension.
class Position {
public:
  Position() = default;
  explicit Position(double x) : dim_(1) { coords_[0] = x; }
  Position(std::initializer_list<double> xs) {
    if(xs.size() == 0 || xs.size() > kMaxDim) {
      throw std::invalid_argument("Position: dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }
    std::copy(xs.begin(), xs.end(), coords_.begin());
    dim_ = static_cast<std::uint8_t>(xs.size());
  }
  static Position from_span(std::span<const double> xs) {
    if(xs.empty() || xs.size() > kMaxDim) {
      throw std::invalid_argument("Position: dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }
    Position p;
    std::copy(xs.begin(), xs.end(), p.coords_.begin());
    p.dim_ = static_cast<std::uint8_t>(xs.size());
    return p;
  }

  std::size_t dim() const noexcept { return dim_; }
  double operator[](std::size_t i) const noexcept { return coords_[i]; }
  double& operator[](std::size_t i) noexcept { return coords_[i]; }
  std::span<const double> coords() const noexcept { return {coords_.data(), dim_}; }

  bool finite() const noexcept {
    return std::all_of(coords_.begin(), coords_.begin() + dim_, [](double c) { return std::isfinite(c); });
  }

  friend bool operator==(const Position&, const Position&) = default;
  friend std::strong_ordering operator<=>(const Position& a, const Position& b) noexcept {
    if(a.dim_ != b.dim_) {
      return a.dim_ <=> b.dim_;
    }
    for(std::size_t i = 0; i < a.dim_; ++i) {
      if(a.coords_[i] < b.coords_[i]) return std::strong_ordering::less;
      if(a.coords_[i] > b.coords_[i]) return std::strong_ordering::greater;
    }
    return std::strong_ordering::equal;
  }

private:
  std::array<double, kMaxDim> coords_{};
  std::uint8_t dim_ = 1;
};

inline double squared_distance(const Position& a, const Position& b) noexcept {
  double r2 = 0.0;
  for(std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    r2 += d * d;
  }
  return r2;
}

inline double distance(const Position& a, const Position& b) noexcept {
  return std::sqrt(squared_distance(a, b));
}

// One weighted atom s * delta_x.
struct Atom {
  double mark = 1.0;
  Position position;

  friend bool operator==(const Atom&, const Atom&) = default;
};

// Atoms of a finite measure, in arbitrary order, positions pairwise distinct.
// Functions on K_0(X) are evaluated on this view so that hot loops can build
// measures in a reusable buffer.
using AtomSpan = std::span<const Atom>;

inline double total_mass(AtomSpan atoms) noexcept {
  double s = 0.0;
  for(const auto& a: atoms) s += a.mark;
  return s;
}

// Axis-aligned box [lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}], closed.
struct Box {
  Position lo;
  Position hi;

  std::size_t dim() const noexcept { return lo.dim(); }
  bool contains(const Position& p) const noexcept {
    for(std::size_t i = 0; i < lo.dim(); ++i) {
      if(p[i] < lo[i] || p[i] > hi[i]) return false;
    }
    return true;
  }
  double volume() const noexcept {
    double v = 1.0;
    for(std::size_t i = 0; i < lo.dim(); ++i) v *= hi[i] - lo[i];
    return v;
  }
  void validate() const {
    if(lo.dim() != hi.dim()) {
      throw std::invalid_argument("Box: corner dimensions differ");
    }
    for(std::size_t i = 0; i < lo.dim(); ++i) {
      if(!(hi[i] > lo[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i])) {
        throw std::invalid_argument("Box: empty or non-finite side");
      }
    }
  }
};

// A pinpointing finite marked configuration: (mark, position) pairs with
// pairwise distinct positions. A configuration is a set, so points are stored
// sorted by position.
class MarkedConfiguration {
public:
  MarkedConfiguration() = default;
  explicit MarkedConfiguration(std::vector<Atom> points) : points_(std::move(points)) {
    for(const auto& p: points_) {
      if(!(p.mark > 0.0) || !std::isfinite(p.mark)) {
        throw std::invalid_argument("MarkedConfiguration: marks must be positive and finite");
      }
      if(!p.position.finite()) {
        throw std::invalid_argument("MarkedConfiguration: non-finite position");
      }
    }
    std::sort(points_.begin(), points_.end(), [](const Atom& a, const Atom& b) { return a.position < b.position; });
    for(std::size_t i = 1; i < points_.size(); ++i) {
      if(points_[i - 1].position == points_[i].position) {
        throw std::invalid_argument("MarkedConfiguration: not pinpointing (repeated position)");
      }
    }
  }
  const std::vector<Atom>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

  friend bool operator==(const MarkedConfiguration&, const MarkedConfiguration&) = default;

private:
  std::vector<Atom> points_;
};

// eta in K_0(X). Atoms are kept sorted by position, so equality is structural.
class FiniteMeasure {
public:
  FiniteMeasure() = default;

  explicit FiniteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for(const auto& a: atoms_) {
      if(!(a.mark > 0.0) || !std::isfinite(a.mark)) {
        throw std::invalid_argument("FiniteMeasure: marks must be positive and finite");
      }
      if(!a.position.finite()) {
        throw std::invalid_argument("FiniteMeasure: non-finite position");
      }
    }
    sort_atoms();
    for(std::size_t i = 1; i < atoms_.size(); ++i) {
      if(atoms_[i - 1].position == atoms_[i].position) {
        throw std::invalid_argument("FiniteMeasure: repeated position");
      }
    }
  }
  FiniteMeasure(std::initializer_list<Atom> atoms) : FiniteMeasure(std::vector<Atom>(atoms)) {}

  static FiniteMeasure from_span(AtomSpan atoms) { return FiniteMeasure(std::vector<Atom>(atoms.begin(), atoms.end())); }

  AtomSpan atoms() const noexcept { return atoms_; }
  std::size_t support_size() const noexcept { return atoms_.size(); }
  bool is_zero() const noexcept { return atoms_.empty(); }
  const Atom& operator[](std::size_t i) const noexcept { return atoms_[i]; }

  double mass() const noexcept { return total_mass(atoms_); }

  // s_x(eta), zero when x is not in the support.
  double mark_at(const Position& x) const noexcept {
    const auto it = find(x);
    return it == atoms_.end() ? 0.0 : it->mark;
  }

  // Measure addition eta + s delta_x; an existing atom at x gains mass s.
  FiniteMeasure plus(const Atom& atom) const {
    if(!(atom.mark > 0.0)) throw std::invalid_argument("FiniteMeasure::plus: mark must be positive");
    FiniteMeasure out = *this;
    auto it = std::lower_bound(out.atoms_.begin(), out.atoms_.end(), atom.position,
                               [](const Atom& a, const Position& p) { return a.position < p; });
    if(it != out.atoms_.end() && it->position == atom.position) {
      it->mark += atom.mark;
    } else {
      out.atoms_.insert(it, atom);
    }
    return out;
  }

  // eta - s_x delta_x for x in the support.
  FiniteMeasure without(const Position& x) const {
    FiniteMeasure out = *this;
    const auto it = std::find_if(out.atoms_.begin(), out.atoms_.end(), [&](const Atom& a) { return a.position == x; });
    if(it == out.atoms_.end()) throw std::invalid_argument("FiniteMeasure::without: position not in support");
    out.atoms_.erase(it);
    return out;
  }

  // Sub-measure keeping atoms whose bit is set in mask.
  FiniteMeasure sub_measure(std::uint64_t mask) const {
    FiniteMeasure out;
    for(std::size_t i = 0; i < atoms_.size(); ++i) {
      if(mask >> i & 1U) out.atoms_.push_back(atoms_[i]);
    }
    return out;
  }

  friend bool operator==(const FiniteMeasure&, const FiniteMeasure&) = default;

private:
  std::vector<Atom>::const_iterator find(const Position& x) const noexcept {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                               [](const Atom& a, const Position& p) { return a.position < p; });
    return it != atoms_.end() && it->position == x ? it : atoms_.end();
  }
  void sort_atoms() {
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.position < b.position; });
  }

  std::vector<Atom> atoms_;
};

// eta(Lambda) = sum of marks of atoms located in the box.
inline double local_mass(const FiniteMeasure& eta, const Box& box) {
  double s = 0.0;
  for(const auto& a: eta.atoms()) {
    if(box.contains(a.position)) s += a.mark;
  }
  return s;
}

inline constexpr std::size_t kMaxEnumerationAtoms = 30;

inline void check_enumeration_budget(std::size_t n, std::size_t cap, const char* what) {
  if(n > cap) {
    throw std::length_error(std::string(what) + ": support of " + std::to_string(n) +
                            " atoms exceeds the enumeration cap of " + std::to_string(cap));
  }
}

// Range over all 2^|tau(eta)| sub-measures xi of eta, each exactly once, in
// bitmask order (mask 0 is the zero measure).
class SubMeasureRange {
public:
  explicit SubMeasureRange(const FiniteMeasure& eta) : eta_(&eta) {
    check_enumeration_budget(eta.support_size(), kMaxEnumerationAtoms, "sub_measures");
  }

  class iterator {
  public:
    using value_type = FiniteMeasure;
    using difference_type = std::ptrdiff_t;
    iterator() = default;
    iterator(const FiniteMeasure* eta, std::uint64_t mask) : eta_(eta), mask_(mask) {}
    FiniteMeasure operator*() const { return eta_->sub_measure(mask_); }
    std::uint64_t mask() const noexcept { return mask_; }
    iterator& operator++() { ++mask_; return *this; }
    iterator operator++(int) { auto tmp = *this; ++mask_; return tmp; }
    bool operator==(const iterator& o) const noexcept { return mask_ == o.mask_; }

  private:
    const FiniteMeasure* eta_ = nullptr;
    std::uint64_t mask_ = 0;
  };

  iterator begin() const { return {eta_, 0}; }
  iterator end() const { return {eta_, std::uint64_t{1} << eta_->support_size()}; }
  std::uint64_t size() const noexcept { return std::uint64_t{1} << eta_->support_size(); }

private:
  const FiniteMeasure* eta_;
};

inline SubMeasureRange sub_measures(const FiniteMeasure& eta) { return SubMeasureRange(eta); }

// R: gamma = sum delta_{(s,x)} -> sum s delta_x.
inline FiniteMeasure r_map(const MarkedConfiguration& gamma) { return FiniteMeasure(gamma.points()); }

inline MarkedConfiguration r_inverse(const FiniteMeasure& eta) {
  return MarkedConfiguration(std::vector<Atom>(eta.atoms().begin(), eta.atoms().end()));
}

} // namespace drm

#endif // DRM_CONE_HPP
