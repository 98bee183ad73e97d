#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace ldgp {

// Worker count from LDGP_THREADS, defaulting to hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("LDGP_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, n). Each index writes only its own slot, so
// results do not depend on the schedule. First exception is rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body, unsigned threads = thread_count()) {
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace ldgp
