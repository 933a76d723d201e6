#ifndef NEUCROWD_PARALLEL_HPP_
#define NEUCROWD_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace neucrowd {

// Runs fn(i) for i in [0, count) over at most `threads` workers. Each index is
// visited exactly once, so callers that write only to slot i get results
// independent of the thread count.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Worker cap from NEUCROWD_THREADS, falling back to hardware concurrency.
int default_thread_count();

}  // namespace neucrowd

#endif  // NEUCROWD_PARALLEL_HPP_
