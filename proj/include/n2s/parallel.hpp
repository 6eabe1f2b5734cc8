// Copyright 2026 The n2s Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace n2s {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> value{0};
  return value;
}
}  // namespace detail

/// Caps worker threads used by parallel kernels. 0 restores the default
/// (hardware concurrency). Results never depend on this value.
inline void set_num_threads(unsigned n) { detail::thread_setting().store(n); }

inline unsigned num_threads() {
  const unsigned n = detail::thread_setting().load();
  if (n != 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(begin, end) over a static partition of [0, count). Each index is
/// visited by exactly one worker, so kernels that write disjoint outputs per
/// index need no synchronization. Ranges smaller than `grain` per worker run
/// inline on the calling thread.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, std::size_t grain = 1) {
  if (count == 0) return;
  const std::size_t max_workers = std::max<std::size_t>(1, count / std::max<std::size_t>(1, grain));
  const std::size_t workers = std::min<std::size_t>(num_threads(), max_workers);
  if (workers <= 1) {
    fn(std::size_t{0}, count);
    return;
  }
  const std::size_t step = (count + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
      const std::size_t begin = std::min(count, w * step);
      const std::size_t end = std::min(count, begin + step);
      pool.emplace_back([&fn, &errors, w, begin, end] {
        try {
          if (begin < end) fn(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    try {
      fn(std::size_t{0}, std::min(count, step));
    } catch (...) {
      errors[0] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace n2s
