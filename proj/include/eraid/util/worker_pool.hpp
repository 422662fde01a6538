#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace eraid {

// Fixed-size pool. run_all() blocks until every job has finished and rethrows
// the first exception any job raised. With zero or one worker jobs run inline.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return workers_; }
  void run_all(std::vector<std::function<void()>> jobs);

 private:
  void loop();

  std::size_t workers_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::deque<std::function<void()>> queue_;
  std::size_t outstanding_ = 0;
  std::exception_ptr first_error_;
  bool stop_ = false;
};

}  // namespace eraid
