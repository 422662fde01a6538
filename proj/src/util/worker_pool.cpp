#include "eraid/util/worker_pool.hpp"

namespace eraid {

WorkerPool::WorkerPool(std::size_t workers) : workers_(workers) {
  if (workers_ <= 1) return;
  for (std::size_t i = 0; i < workers_; ++i) threads_.emplace_back([this] { loop(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lk(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::loop() {
  for (;;) {
    std::function<void()> job;
    {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [&] { return stop_ || !queue_.empty(); });
      if (stop_ && queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.pop_front();
    }
    try {
      job();
    } catch (...) {
      std::lock_guard lk(mu_);
      if (!first_error_) first_error_ = std::current_exception();
    }
    {
      std::lock_guard lk(mu_);
      if (--outstanding_ == 0) done_cv_.notify_all();
    }
  }
}

void WorkerPool::run_all(std::vector<std::function<void()>> jobs) {
  if (threads_.empty()) {
    for (auto& j : jobs) j();
    return;
  }
  std::unique_lock lk(mu_);
  first_error_ = nullptr;
  outstanding_ += jobs.size();
  for (auto& j : jobs) queue_.push_back(std::move(j));
  cv_.notify_all();
  done_cv_.wait(lk, [&] { return outstanding_ == 0; });
  if (first_error_) {
    auto e = first_error_;
    first_error_ = nullptr;
    std::rethrow_exception(e);
  }
}

}  // namespace eraid
