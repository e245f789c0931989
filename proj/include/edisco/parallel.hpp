#pragma once
// Worker-count resolution and a static-partition parallel loop. Partitioning
// depends only on (count, workers), and workers never share output slots, so
// results are identical for every worker count.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace edisco {

// Effective worker count: `requested` if nonzero, else hardware concurrency,
// in both cases capped by the EDISCO_THREADS environment variable when set to
// a positive integer.
inline std::size_t worker_count(std::size_t requested = 0) {
  std::size_t n = requested;
  if (n == 0) {
    n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
  }
  if (const char* env = std::getenv("EDISCO_THREADS")) {
    char* end = nullptr;
    long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0)
      n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

// Calls body(begin, end) on disjoint chunks covering [0, count). `workers`
// must already be resolved (see worker_count); the first exception thrown by
// any chunk is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
  if (count == 0) return;
  workers = std::min(std::max<std::size_t>(workers, 1), count);
  if (workers == 1) {
    body(std::size_t{0}, count);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = std::min(w * chunk, count);
    const std::size_t end = std::min(begin + chunk, count);
    pool.emplace_back([&, w, begin, end] {
      try {
        if (begin < end) body(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  try {
    body(std::size_t{0}, std::min(chunk, count));
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& t : pool) t.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace edisco
