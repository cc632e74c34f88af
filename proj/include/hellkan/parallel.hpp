#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace hellkan {

// worker budget; HELLKAN_THREADS caps the pool
inline int thread_budget() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("HELLKAN_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v < hw ? v : hw;
  }
  return hw;
}

// index-parallel map; results must go into per-index slots so the outcome is
// independent of scheduling
template <typename F>
inline void parallel_for(int n, F&& f) {
  int workers = thread_budget();
  if (workers > n) workers = n;
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w)
    threads.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
    });
  for (auto& t : threads) t.join();
}

}  // namespace hellkan
