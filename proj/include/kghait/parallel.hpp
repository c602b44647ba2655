#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kghait {

/// Process-wide worker cap (the CLI's --jobs). 0 means hardware concurrency.
inline std::size_t& default_jobs() {
  static std::size_t jobs = 0;
  return jobs;
}

inline std::size_t resolve_jobs(std::size_t jobs) {
  if (jobs == 0) jobs = default_jobs();
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  return jobs;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads using contiguous
/// chunks. Each index is visited by exactly one worker; the call returns
/// after all workers finish. The first exception thrown is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t jobs = 0) {
  jobs = std::min(resolve_jobs(jobs), n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(jobs);
    const std::size_t chunk = (n + jobs - 1) / jobs;
    for (std::size_t w = 0; w < jobs; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      workers.emplace_back([&, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace kghait
