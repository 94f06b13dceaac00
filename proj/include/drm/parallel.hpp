#ifndef DRM_PARALLEL_HPP
#define DRM_PARALLEL_HPP

// Block-parallel loops whose results do not depend on the worker count: work
// is split into a fixed set of blocks, each block writes its own slot, and the
// caller reduces the slots in block order.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace drm {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> threads{1};
  return threads;
}
} // namespace detail

// Number of worker threads used by parallel_blocks. 0 selects hardware concurrency.
inline void set_thread_count(unsigned n) {
  if(n == 0) n = std::max(1U, std::thread::hardware_concurrency());
  detail::thread_setting().store(n);
}
inline unsigned thread_count() { return detail::thread_setting().load(); }

// Calls body(block) for every block in [0, n_blocks). Blocks are claimed
// dynamically; the first exception thrown by any block is rethrown.
template<typename Body>
void parallel_blocks(std::size_t n_blocks, Body&& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n_blocks));
  if(workers <= 1) {
    for(std::size_t b = 0; b < n_blocks; ++b) body(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for(;;) {
      const std::size_t b = next.fetch_add(1);
      if(b >= n_blocks) return;
      try {
        body(b);
      } catch(...) {
        std::lock_guard lock(error_mutex);
        if(!error) error = std::current_exception();
        next.store(n_blocks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for(unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for(auto& t: pool) t.join();
  if(error) std::rethrow_exception(error);
}

// Pairwise (cascade) summation; deterministic for a given input order.
inline double pairwise_sum(const double* x, std::size_t n) {
  if(n <= 8) {
    double s = 0.0;
    for(std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}
inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

// SplitMix64: seed derivation for per-block generators.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

} // namespace drm

#endif // DRM_PARALLEL_HPP
