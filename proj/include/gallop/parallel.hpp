#pragma once

// Deterministic parallel map: cell i's result lands in slot i whatever the
// execution order, so outputs do not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace gallop {

template <class F>
auto parallel_map(std::size_t n, int workers, F&& f) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<R> out(n);
  const std::size_t nw = std::clamp<std::size_t>(workers > 0 ? static_cast<std::size_t>(workers) : 1, 1, std::max<std::size_t>(n, 1));
  if (nw == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        out[i] = f(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (std::size_t k = 0; k < nw; ++k) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace gallop
