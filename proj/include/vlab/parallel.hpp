#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace vlab {

// Static block partition of [0, n) over the requested thread count. Each
// index is processed exactly once and writes only its own slot, so results
// do not depend on the degree of parallelism.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int k = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(k);
  for (int t = 0; t < k; ++t) {
    pool.emplace_back([&, t]() {
      for (int i = t; i < n; i += k) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace vlab
