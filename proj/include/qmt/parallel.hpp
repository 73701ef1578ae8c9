#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace qmt {

inline int effective_threads(int threads) {
  if (threads > 0) return threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Sum of f(i) for i in [begin, end), partitioned by index so the result
// does not depend on the thread count. f must be safe to call
// concurrently for distinct i.
template <class F>
long long parallel_count(long long begin, long long end, int threads, F&& f) {
  const int t = effective_threads(threads);
  if (t <= 1 || end - begin < 2 * t) {
    long long acc = 0;
    for (long long i = begin; i < end; ++i) acc += f(i) ? 1 : 0;
    return acc;
  }
  std::vector<long long> partial(static_cast<size_t>(t), 0);
  std::vector<std::thread> pool;
  const long long span = end - begin;
  for (int w = 0; w < t; ++w) {
    const long long lo = begin + span * w / t;
    const long long hi = begin + span * (w + 1) / t;
    pool.emplace_back([&, lo, hi, w] {
      long long acc = 0;
      for (long long i = lo; i < hi; ++i) acc += f(i) ? 1 : 0;
      partial[static_cast<size_t>(w)] = acc;
    });
  }
  for (auto& th : pool) th.join();
  long long acc = 0;
  for (long long v : partial) acc += v;
  return acc;
}

template <class F>
void parallel_for(long long begin, long long end, int threads, F&& f) {
  const int t = effective_threads(threads);
  if (t <= 1 || end - begin < 2 * t) {
    for (long long i = begin; i < end; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  const long long span = end - begin;
  for (int w = 0; w < t; ++w) {
    const long long lo = begin + span * w / t;
    const long long hi = begin + span * (w + 1) / t;
    pool.emplace_back([&, lo, hi] {
      for (long long i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace qmt
