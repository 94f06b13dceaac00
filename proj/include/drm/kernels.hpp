#ifndef DRM_KERNELS_HPP
#define DRM_KERNELS_HPP

// Named closed-form rate kernels used by the model configs:
//   mark kernels       m(s)
//   mark-pair kernels  q(s', s)
//   spatial kernels    a(x) on displacements
//   radial potentials  phi(r), r = |x - y|

#include "drm/cone.hpp"
#include "drm/io.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace drm {

using MarkKernel = std::function<double(double)>;
using MarkPairKernel = std::function<double(double, double)>;
using SpatialKernel = std::function<double(const Position&)>;

namespace detail {

// Piecewise-linear interpolation, constant beyond the ends.
inline double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if(x <= xs.front()) return ys.front();
  if(x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return (1.0 - t) * ys[lo] + t * ys[hi];
}

inline void read_table(ConfigObject& o, const char* xkey, std::vector<double>& xs, std::vector<double>& ys) {
  xs = o.get<std::vector<double>>(xkey);
  ys = o.get<std::vector<double>>("values");
  if(xs.size() < 2 || xs.size() != ys.size()) {
    throw ConfigError(o.path(xkey) + ": table needs >= 2 points and matching values");
  }
  for(std::size_t i = 1; i < xs.size(); ++i) {
    if(!(xs[i] > xs[i - 1])) throw ConfigError(o.path(xkey) + ": table abscissae must increase");
  }
}

inline double nonnegative(ConfigObject& o, const char* key) {
  const double v = o.get<double>(key);
  if(!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(o.path(key) + ": must be finite and >= 0");
  return v;
}

inline double positive(ConfigObject& o, const char* key) {
  const double v = o.get<double>(key);
  if(!(v > 0.0) || !std::isfinite(v)) throw ConfigError(o.path(key) + ": must be finite and > 0");
  return v;
}

} // namespace detail

// {"form": "constant", "value": c} | {"form": "linear", "intercept": a, "slope": b}
// | {"form": "table", "s": [...], "values": [...]}; must be >= 0 on (0, inf).
inline MarkKernel mark_kernel_from_json(const json& j, const std::string& path) {
  ConfigObject o(j, path);
  const auto form = o.get<std::string>("form");
  MarkKernel k;
  if(form == "constant") {
    const double c = detail::nonnegative(o, "value");
    k = [c](double) { return c; };
  } else if(form == "linear") {
    const double a = detail::nonnegative(o, "intercept");
    const double b = detail::nonnegative(o, "slope");
    k = [a, b](double s) { return a + b * s; };
  } else if(form == "table") {
    std::vector<double> xs;
    std::vector<double> ys;
    detail::read_table(o, "s", xs, ys);
    if(std::any_of(ys.begin(), ys.end(), [](double v) { return v < 0.0; })) {
      throw ConfigError(o.path("values") + ": must be >= 0");
    }
    k = [xs, ys](double s) { return detail::interpolate(xs, ys, s); };
  } else {
    throw ConfigError(o.path("form") + ": unknown mark kernel form '" + form + "'");
  }
  o.finish();
  return k;
}

// q(s', s): {"form": "constant", "value"} | {"form": "exp_first", "scale", "rate"}
// (scale e^{-rate s'}) | {"form": "gaussian_diff", "scale", "width"}
// (scale exp(-(s - s')^2 / (2 width^2)), symmetric).
inline MarkPairKernel mark_pair_kernel_from_json(const json& j, const std::string& path) {
  ConfigObject o(j, path);
  const auto form = o.get<std::string>("form");
  MarkPairKernel k;
  if(form == "constant") {
    const double c = detail::nonnegative(o, "value");
    k = [c](double, double) { return c; };
  } else if(form == "exp_first") {
    const double c = detail::nonnegative(o, "scale");
    const double r = detail::nonnegative(o, "rate");
    k = [c, r](double sp, double) { return c * std::exp(-r * sp); };
  } else if(form == "gaussian_diff") {
    const double c = detail::nonnegative(o, "scale");
    const double w = detail::positive(o, "width");
    k = [c, w](double sp, double s) { return c * std::exp(-(s - sp) * (s - sp) / (2.0 * w * w)); };
  } else {
    throw ConfigError(o.path("form") + ": unknown mark-pair kernel form '" + form + "'");
  }
  o.finish();
  return k;
}

// a(x): {"form": "constant", "value"} | {"form": "gaussian", "scale", "width"}
// | {"form": "top_hat", "scale", "radius"}. All are even in x.
inline SpatialKernel spatial_kernel_from_json(const json& j, const std::string& path) {
  ConfigObject o(j, path);
  const auto form = o.get<std::string>("form");
  SpatialKernel k;
  if(form == "constant") {
    const double c = detail::nonnegative(o, "value");
    k = [c](const Position&) { return c; };
  } else if(form == "gaussian") {
    const double c = detail::nonnegative(o, "scale");
    const double w = detail::positive(o, "width");
    k = [c, w](const Position& x) {
      double r2 = 0.0;
      for(std::size_t i = 0; i < x.dim(); ++i) r2 += x[i] * x[i];
      return c * std::exp(-r2 / (2.0 * w * w));
    };
  } else if(form == "top_hat") {
    const double c = detail::nonnegative(o, "scale");
    const double r = detail::positive(o, "radius");
    k = [c, r](const Position& x) {
      double r2 = 0.0;
      for(std::size_t i = 0; i < x.dim(); ++i) r2 += x[i] * x[i];
      return r2 <= r * r ? c : 0.0;
    };
  } else {
    throw ConfigError(o.path("form") + ": unknown spatial kernel form '" + form + "'");
  }
  o.finish();
  return k;
}

// Radial pair potential phi(|x - y|) with finite range.
struct RadialPotential {
  std::function<double(double)> profile; // r -> phi
  double range = 0.0;                    // phi(r) = 0 for r > range
  std::string form;

  double operator()(double r) const { return r > range ? 0.0 : profile(r); }
  double operator()(const Position& x, const Position& y) const { return (*this)(distance(x, y)); }
};

// {"form": "zero"} | {"form": "step", "height", "radius"}
// | {"form": "bump", "height", "radius"}: height (1 - (r/R)^2)^2 for r <= R
// | {"form": "step_with_tail", "height", "radius", "tail_depth", "tail_radius"}:
//     height on [0, radius], -tail_depth on (radius, tail_radius]
// | {"form": "table", "r": [...], "values": [...]}: range is the last r.
inline RadialPotential potential_from_json(const json& j, const std::string& path) {
  ConfigObject o(j, path);
  RadialPotential p;
  p.form = o.get<std::string>("form");
  if(p.form == "zero") {
    p.profile = [](double) { return 0.0; };
    p.range = 0.0;
  } else if(p.form == "step") {
    const double h = o.get<double>("height");
    const double r = detail::positive(o, "radius");
    p.profile = [h](double) { return h; };
    p.range = r;
  } else if(p.form == "bump") {
    const double h = o.get<double>("height");
    const double r = detail::positive(o, "radius");
    p.profile = [h, r](double x) {
      const double u = 1.0 - (x / r) * (x / r);
      return h * u * u;
    };
    p.range = r;
  } else if(p.form == "step_with_tail") {
    const double h = o.get<double>("height");
    const double r = detail::positive(o, "radius");
    const double depth = detail::nonnegative(o, "tail_depth");
    const double tail = detail::positive(o, "tail_radius");
    if(!(tail > r)) throw ConfigError(o.path("tail_radius") + ": must exceed radius");
    p.profile = [h, r, depth](double x) { return x <= r ? h : -depth; };
    p.range = tail;
  } else if(p.form == "table") {
    std::vector<double> xs;
    std::vector<double> ys;
    detail::read_table(o, "r", xs, ys);
    if(xs.front() != 0.0) throw ConfigError(o.path("r") + ": table must start at r = 0");
    p.profile = [xs, ys](double x) { return detail::interpolate(xs, ys, x); };
    p.range = xs.back();
  } else {
    throw ConfigError(o.path("form") + ": unknown potential form '" + p.form + "'");
  }
  o.finish();
  return p;
}

inline RadialPotential zero_potential() {
  RadialPotential p;
  p.profile = [](double) { return 0.0; };
  p.range = 0.0;
  p.form = "zero";
  return p;
}

} // namespace drm

#endif // DRM_KERNELS_HPP
