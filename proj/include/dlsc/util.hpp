#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "dlsc/core.hpp"

namespace dlsc {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive child seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for a sub-stream identified by (master, a, b). Order independent of
/// how the sub-streams are scheduled.
constexpr std::uint64_t child_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(master) ^ a) ^ (b + 0x632be59bd9b4e019ULL));
}

inline Vector gaussian_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

/// Uniform on the unit sphere S^{n-1}.
inline Vector sphere_point(Eigen::Index n, Rng& rng) {
  for (;;) {
    Vector v = gaussian_vector(n, rng);
    const double nrm = v.norm();
    if (nrm > 1e-300) return v / nrm;
  }
}

/// Dictionary with independent uniform atoms (Gaussian columns, normalized).
inline Dictionary random_dictionary(Eigen::Index m, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix atoms(m, d);
  for (Eigen::Index j = 0; j < d; ++j) atoms.col(j) = sphere_point(m, rng);
  return Dictionary(std::move(atoms));
}

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers (0 = auto).
/// Each index is handled exactly once; callers write into index-addressed
/// slots and reduce afterwards in index order. The first exception thrown by
/// any worker is rethrown on the calling thread.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace dlsc
