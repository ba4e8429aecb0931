// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace stochctl {

/// Execution knobs for estimators that fan out over paths or replicas.
/// threads == 0 means std::thread::hardware_concurrency().
struct Exec {
  unsigned threads = 0;

  unsigned resolved() const {
    if (threads != 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
  }
};

/// Runs fn(i) for i in [0, n) with a static stride partition. Results must be
/// written to per-index slots by the caller, so the outcome does not depend
/// on the thread count. If several indices throw, the exception of the
/// lowest index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(exec.resolved(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace stochctl
