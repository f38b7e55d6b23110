#ifndef GPH_PARALLEL_HPP
#define GPH_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gph {

/// Runs body(k) for k in [0, count) on up to `workers` threads. Tasks must
/// write disjoint outputs; the first exception thrown is rethrown here.
template <typename Body>
void parallel_for(std::size_t count, int workers, Body &&body) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || count <= 1) {
    for (std::size_t k = 0; k < count; ++k) {
      body(k);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        body(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(threads, count); ++t) {
    pool.emplace_back(run);
  }
  pool.clear();
  if (error) {
    std::rethrow_exception(error);
  }
}

} // namespace gph

#endif // GPH_PARALLEL_HPP
