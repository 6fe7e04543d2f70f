#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace tild {

// Persistent pool for the per-step parallel map over chains. Work is split
// into one contiguous block per thread (the caller runs block 0), so the set
// of (chain, step) RNG draws -- and therefore the output -- is independent of
// the thread count. Not reentrant.
class ThreadPool {
 public:
  explicit ThreadPool(int n_threads);
  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int threads() const { return n_threads_; }

  // body(lo, hi) over a partition of [begin, end); rethrows the first worker
  // exception on the calling thread.
  void parallel_for(long begin, long end, const std::function<void(long, long)>& body);

 private:
  void worker_main(int index);

  int n_threads_;
  std::vector<std::thread> workers_;
  std::mutex m_;
  std::condition_variable cv_work_, cv_done_;
  std::vector<std::pair<long, long>> blocks_;
  const std::function<void(long, long)>* body_ = nullptr;
  std::uint64_t epoch_ = 0;
  int pending_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace tild
