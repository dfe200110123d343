#pragma once

#include <thread>
#include <vector>

namespace pwc {

// Runs body(worker, begin, end) over a static partition of [0, n) into
// contiguous chunks, one per worker. The partition depends only on (n,
// workers), so reductions that combine per-worker results in ascending
// worker order are deterministic for a fixed worker count.
template <class F>
void parallel_for(int n, int workers, F&& body) {
  if (workers < 1) workers = 1;
  if (workers > n) workers = n > 0 ? n : 1;
  if (workers == 1) {
    body(0, 0, n);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) {
    int lo = static_cast<int>(static_cast<long long>(n) * w / workers);
    int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    threads.emplace_back([&body, w, lo, hi] { body(w, lo, hi); });
  }
  body(0, 0, static_cast<int>(static_cast<long long>(n) / workers));
  for (auto& t : threads) t.join();
}

}  // namespace pwc
