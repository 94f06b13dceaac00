#ifndef DRM_HIERARCHY_HPP
#define DRM_HIERARCHY_HPP

// Correlation hierarchies on a grid: level n is a dense tensor over
// (product node)^n, flattened row-major (slot 1 slowest).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace drm {

// Raised when a computation produces NaN or infinity.
class NumericalAbort : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxTensorEntries = 2'000'000;

inline std::size_t ipow(std::size_t base, std::size_t e) {
  std::size_t r = 1;
  for(std::size_t i = 0; i < e; ++i) r *= base;
  return r;
}

inline void check_tensor_budget(std::size_t nodes, std::size_t n_max) {
  double entries = 1.0;
  for(std::size_t i = 0; i < n_max; ++i) entries *= static_cast<double>(nodes);
  if(entries > static_cast<double>(kMaxTensorEntries)) {
    throw std::length_error("tensor budget: " + std::to_string(nodes) + "^" + std::to_string(n_max) +
                            " entries exceeds " + std::to_string(kMaxTensorEntries));
  }
}

struct HierarchyState {
  std::size_t nodes = 0;               // product nodes V
  std::vector<Eigen::VectorXd> levels; // levels[n - 1] has V^n entries
  double t = 0.0;

  HierarchyState() = default;
  HierarchyState(std::size_t v, std::size_t n_max) : nodes(v) {
    check_tensor_budget(v, n_max);
    for(std::size_t n = 1; n <= n_max; ++n) levels.emplace_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ipow(v, n))));
  }

  std::size_t n_max() const noexcept { return levels.size(); }
  Eigen::VectorXd& level(std::size_t n) { return levels.at(n - 1); }
  const Eigen::VectorXd& level(std::size_t n) const { return levels.at(n - 1); }
};

// Digits of a flat index: idx = sum_k d_k V^{n-1-k}.
inline void decode_index(std::size_t idx, std::size_t V, std::size_t n, std::vector<std::size_t>& digits) {
  digits.resize(n);
  for(std::size_t k = n; k-- > 0;) {
    digits[k] = idx % V;
    idx /= V;
  }
}

inline std::size_t encode_index(const std::vector<std::size_t>& digits, std::size_t V) {
  std::size_t idx = 0;
  for(auto d: digits) idx = idx * V + d;
  return idx;
}

// Fills level n with f(v_1, ..., v_n).
inline void fill_level(HierarchyState& s, std::size_t n, const std::function<double(const std::vector<std::size_t>&)>& f) {
  auto& x = s.level(n);
  std::vector<std::size_t> digits;
  for(Eigen::Index i = 0; i < x.size(); ++i) {
    decode_index(static_cast<std::size_t>(i), s.nodes, n, digits);
    x[i] = f(digits);
  }
}

// y = (P x ... x P) x: P applied along every slot of an n-tensor.
inline Eigen::VectorXd apply_all_modes(const Eigen::MatrixXd& P, const Eigen::VectorXd& x, std::size_t n) {
  const auto V = static_cast<std::size_t>(P.rows());
  Eigen::VectorXd cur = x;
  Eigen::VectorXd next(x.size());
  for(std::size_t k = 0; k < n; ++k) {
    const std::size_t inner = ipow(V, n - 1 - k);
    const std::size_t outer = ipow(V, k);
    const auto iv = static_cast<Eigen::Index>(inner);
    const auto vv = static_cast<Eigen::Index>(V);
    for(std::size_t o = 0; o < outer; ++o) {
      // Slab o as an inner x V column-major matrix: entry (i, v) at v * inner + i.
      Eigen::Map<const Eigen::MatrixXd> X(cur.data() + o * V * inner, iv, vv);
      Eigen::Map<Eigen::MatrixXd> Y(next.data() + o * V * inner, iv, vv);
      Y.noalias() = X * P.transpose();
    }
    std::swap(cur, next);
  }
  return cur;
}

// y = sum_i (I x .. x P_i x .. x I) x.
inline Eigen::VectorXd apply_slot_sum(const Eigen::MatrixXd& P, const Eigen::VectorXd& x, std::size_t n) {
  const auto V = static_cast<std::size_t>(P.rows());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  for(std::size_t k = 0; k < n; ++k) {
    const std::size_t inner = ipow(V, n - 1 - k);
    const std::size_t outer = ipow(V, k);
    const auto iv = static_cast<Eigen::Index>(inner);
    const auto vv = static_cast<Eigen::Index>(V);
    for(std::size_t o = 0; o < outer; ++o) {
      Eigen::Map<const Eigen::MatrixXd> X(x.data() + o * V * inner, iv, vv);
      Eigen::Map<Eigen::MatrixXd> Y(y.data() + o * V * inner, iv, vv);
      Y.noalias() += X * P.transpose();
    }
  }
  return y;
}

// Largest |x(v) - x(pi v)| over transpositions of adjacent slots, relative to max |x|.
inline double asymmetry(const Eigen::VectorXd& x, std::size_t V, std::size_t n) {
  if(n < 2 || x.size() == 0) return 0.0;
  const double scale = std::max(x.cwiseAbs().maxCoeff(), 1e-300);
  double worst = 0.0;
  std::vector<std::size_t> digits;
  for(Eigen::Index i = 0; i < x.size(); ++i) {
    decode_index(static_cast<std::size_t>(i), V, n, digits);
    for(std::size_t k = 0; k + 1 < n; ++k) {
      std::swap(digits[k], digits[k + 1]);
      worst = std::max(worst, std::abs(x[i] - x[static_cast<Eigen::Index>(encode_index(digits, V))]));
      std::swap(digits[k], digits[k + 1]);
    }
  }
  return worst / scale;
}

inline double max_norm(const Eigen::VectorXd& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

inline void require_finite(const Eigen::VectorXd& x, const std::string& what) {
  if(!x.allFinite()) throw NumericalAbort(what + ": non-finite value encountered");
}

inline void require_finite(const HierarchyState& s, const std::string& what) {
  for(std::size_t n = 1; n <= s.n_max(); ++n) require_finite(s.level(n), what + " (level " + std::to_string(n) + ")");
}

// Symmetrization over all slot permutations.
inline Eigen::VectorXd symmetrize(const Eigen::VectorXd& x, std::size_t V, std::size_t n) {
  if(n < 2) return x;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  std::size_t count = 0;
  std::vector<std::size_t> digits;
  std::vector<std::size_t> permuted(n);
  do {
    ++count;
    for(Eigen::Index i = 0; i < x.size(); ++i) {
      decode_index(static_cast<std::size_t>(i), V, n, digits);
      for(std::size_t k = 0; k < n; ++k) permuted[k] = digits[perm[k]];
      y[i] += x[static_cast<Eigen::Index>(encode_index(permuted, V))];
    }
  } while(std::next_permutation(perm.begin(), perm.end()));
  return y / static_cast<double>(count);
}

} // namespace drm

#endif // DRM_HIERARCHY_HPP
