#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace efsgd {

/// Runs body(i) for i in [0, n) on up to `threads` threads. Index i always
/// goes to lane i mod lanes. The first exception by index order is rethrown
/// after all lanes finish.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  const std::size_t lanes = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (lanes <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    pool.reserve(lanes);
    for (std::size_t lane = 0; lane < lanes; ++lane) {
      pool.emplace_back([&, lane] {
        for (std::size_t i = lane; i < n; i += lanes) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace efsgd
