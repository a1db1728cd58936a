#include "d3stereo/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace d3stereo {
namespace {

int initial_worker_count() {
  if (const char* env = std::getenv("D3STEREO_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

std::atomic<int>& workers() {
  static std::atomic<int> n{initial_worker_count()};
  return n;
}

}  // namespace

int worker_count() { return workers().load(); }

void set_worker_count(int n) { workers().store(std::max(1, n)); }

void parallel_rows(int begin, int end, const std::function<void(int, int)>& body) {
  const int rows = end - begin;
  if (rows <= 0) return;
  const int n = std::min(worker_count(), rows);
  if (n <= 1) {
    body(begin, end);
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    const int lo = begin + static_cast<int>(static_cast<long long>(rows) * t / n);
    const int hi = begin + static_cast<int>(static_cast<long long>(rows) * (t + 1) / n);
    threads.emplace_back([&, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace d3stereo
