#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cemgms {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Tasks must write to
/// disjoint outputs; the first exception thrown by any task is rethrown.
class ParallelFor {
public:
  explicit ParallelFor(int threads = 1) : threads_(std::max(1, threads)) {}

  int threads() const { return threads_; }

  template <class Fn>
  void operator()(int n, const Fn& fn) const
  {
    const int workers = std::min(threads_, n);
    if (workers <= 1) {
      for (int i = 0; i < n; ++i) fn(i);
      return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex errorMutex;
    auto work = [&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(errorMutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

private:
  int threads_;
};

}  // namespace cemgms
