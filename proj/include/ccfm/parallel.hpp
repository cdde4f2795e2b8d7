#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace ccfm {

/// Runs body(begin, end) over `jobs` contiguous chunks of [0, count). Chunk
/// boundaries depend only on (count, jobs); the first exception is rethrown.
template <typename Body>
void parallel_chunks(long count, int jobs, Body&& body) {
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(std::max(1L, count))));
  if (jobs == 1) {
    body(0L, count);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(jobs);
  for (int j = 0; j < jobs; ++j) {
    const long begin = count * j / jobs;
    const long end = count * (j + 1) / jobs;
    workers.emplace_back([&, j, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Calls body(i) for each i in [0, count), spread over `jobs` threads.
template <typename Body>
void parallel_for(long count, int jobs, Body&& body) {
  parallel_chunks(count, jobs, [&](long begin, long end) {
    for (long i = begin; i < end; ++i) body(i);
  });
}

}  // namespace ccfm
