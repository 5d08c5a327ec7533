#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace gtex {

// Runs body(i) for i in [begin, end) over contiguous chunks on worker threads. Each index is
// processed exactly once, so results are independent of the thread count as long as body(i)
// only writes state owned by i.
template <typename Body>
void parallel_for(int begin, int end, Body&& body) {
  const int count = end - begin;
  if (count <= 0) return;
  const int workers = std::min<int>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1 || count < 64) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  const int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + w * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
}

}  // namespace gtex
