#pragma once

#include <complex>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace hemet {

/// Runs fn(i) for i in [0, n) across up to n_threads workers using a static
/// block partition. Workers write to disjoint, caller-owned slots; combined
/// with a fixed-order reduction afterwards this makes results independent of
/// the thread count and schedule. The first exception thrown by any worker
/// is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t n, int n_threads, Fn&& fn) {
  if (n == 0) return;
  const std::size_t workers =
      n_threads <= 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(n_threads), n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn, &first_error, &error_mutex] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Pairwise (tree) summation with a deterministic topology: the result
/// depends only on the element order, never on how work was scheduled.
template <class T>
T pairwise_sum(std::span<const T> xs) {
  const std::size_t n = xs.size();
  if (n == 0) return T{};
  if (n <= 8) {
    T acc = xs[0];
    for (std::size_t i = 1; i < n; ++i) acc += xs[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

inline std::complex<double> pairwise_sum(const std::vector<std::complex<double>>& xs) {
  return pairwise_sum(std::span<const std::complex<double>>(xs));
}
inline double pairwise_sum(const std::vector<double>& xs) {
  return pairwise_sum(std::span<const double>(xs));
}

}  // namespace hemet
