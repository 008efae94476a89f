#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fincode {

// Runs fn(seed) for each seed and returns the results in seed order. The
// parallel version hands seeds to an OpenMP pool; since every replica draws
// only from its own seed, the output is independent of the schedule. The
// first exception (lowest seed index) is rethrown after all replicas finish.
template <class Result>
std::vector<Result> map_seeds_serial(const std::vector<std::uint64_t>& seeds,
                                     const std::function<Result(std::uint64_t)>& fn) {
  std::vector<Result> out;
  out.reserve(seeds.size());
  for (auto s : seeds) out.push_back(fn(s));
  return out;
}

template <class Result>
std::vector<Result> map_seeds_parallel(const std::vector<std::uint64_t>& seeds,
                                       const std::function<Result(std::uint64_t)>& fn, int jobs) {
  if (jobs <= 1) return map_seeds_serial<Result>(seeds, fn);
  std::vector<Result> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  const std::int64_t n = static_cast<std::int64_t>(seeds.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(seeds[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

template <class Result>
std::vector<Result> map_seeds(const std::vector<std::uint64_t>& seeds, const std::function<Result(std::uint64_t)>& fn,
                              int jobs) {
  return jobs <= 1 ? map_seeds_serial<Result>(seeds, fn) : map_seeds_parallel<Result>(seeds, fn, jobs);
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, std::uint64_t last) {
  std::vector<std::uint64_t> s;
  for (std::uint64_t x = first; x <= last; ++x) {
    s.push_back(x);
    if (x == last) break;
  }
  return s;
}

}  // namespace fincode
