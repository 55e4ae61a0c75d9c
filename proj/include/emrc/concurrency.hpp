#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace emrc {

/// Counting gate that blocks acquirers once `limit` permits are out.
class InflightLimiter {
 public:
  explicit InflightLimiter(std::size_t limit) : limit_(limit == 0 ? 1 : limit) {}

  InflightLimiter(const InflightLimiter&) = delete;
  InflightLimiter& operator=(const InflightLimiter&) = delete;

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      --in_flight_;
    }
    cv_.notify_one();
  }

  std::size_t limit() const { return limit_; }

  /// RAII permit; acquires on construction, releases on destruction.
  class Permit {
   public:
    explicit Permit(InflightLimiter& limiter) : limiter_(limiter) { limiter_.acquire(); }
    ~Permit() { limiter_.release(); }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

   private:
    InflightLimiter& limiter_;
  };

 private:
  std::size_t limit_;
  std::size_t in_flight_ = 0;
  std::mutex mutex_;
  std::condition_variable cv_;
};

/// Runs fn(0..count-1) on up to `parallel` worker threads. parallel <= 1 runs
/// inline in index order. The first exception thrown by any worker is
/// rethrown after all workers finish; later ones are dropped.
inline void parallel_for(std::size_t count, std::size_t parallel,
                         const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  if (parallel <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::size_t workers = std::min(parallel, count);
  std::mutex mutex;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto body = [&] {
    for (;;) {
      std::size_t index;
      {
        std::lock_guard lock(mutex);
        if (next >= count || failure) return;
        index = next++;
      }
      try {
        fn(index);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) threads.emplace_back(body);
  for (auto& thread : threads) thread.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace emrc
