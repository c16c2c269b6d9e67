#ifndef LRTCONE_PARALLEL_HPP_
#define LRTCONE_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lrtcone {

/*
 * Runs body(i) for i in [0, n) on up to `workers` threads. Indices are handed
 * out dynamically; callers write results into slot i so the outcome is
 * independent of scheduling. The first exception thrown by any body is
 * rethrown on the calling thread.
 */
template <typename Body>
void parallel_for(std::size_t n, std::size_t workers, Body &&body) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto run = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) {
        return;
      }
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) {
          first_error = std::current_exception();
        }
        next.store(n);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    pool.emplace_back(run);
  }
  run();
  for (auto &t : pool) {
    t.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

std::size_t default_workers();

} // namespace lrtcone

#endif /* LRTCONE_PARALLEL_HPP_ */
