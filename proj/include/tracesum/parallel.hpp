#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tracesum
{

// Process-wide worker count used by parallel scans; 1 disables threading.
int default_threads();
void set_default_threads(int threads);

// Runs fn(i) for i in [0, n). Work is split in contiguous chunks, so results
// written by index are independent of the thread count. The first exception
// thrown by a worker is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, Fn &&fn, int threads = default_threads())
{
  const std::size_t workers =
    std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), n));
  if (workers == 1)
  {
    for (std::size_t i = 0; i < n; i++)
    {
      fn(i);
    }
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex lock;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; w++)
  {
    const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    pool.emplace_back([lo, hi, &fn, &failure, &lock] {
      try
      {
        for (std::size_t i = lo; i < hi; i++)
        {
          fn(i);
        }
      }
      catch (...)
      {
        std::lock_guard<std::mutex> guard(lock);
        if (!failure)
        {
          failure = std::current_exception();
        }
      }
    });
  }
  for (auto &t : pool)
  {
    t.join();
  }
  if (failure)
  {
    std::rethrow_exception(failure);
  }
}

}  // namespace tracesum
