#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "arvae/common.hpp"

namespace arvae {

// Fixed set of persistent workers executing one batch of jobs at a time.
// Persistent threads keep per-thread buffer pools warm across steps.
class ThreadTeam {
 public:
  explicit ThreadTeam(int workers) {
    for (int i = 0; i < workers; ++i)
      threads_.emplace_back([this, i] { worker_loop(i); });
  }

  ~ThreadTeam() {
    {
      std::unique_lock<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int size() const { return static_cast<int>(threads_.size()); }

  // Runs jobs[i] on worker i (jobs.size() <= size()); blocks until all finish.
  // Exceptions are rethrown on the caller thread.
  void run(std::vector<std::function<void()>> jobs) {
    require(jobs.size() <= threads_.size(), "thread team: too many jobs");
    {
      std::unique_lock<std::mutex> lock(mu_);
      jobs_ = std::move(jobs);
      pending_ = static_cast<int>(jobs_.size());
      ++generation_;
      errors_.assign(jobs_.size(), nullptr);
    }
    cv_.notify_all();
    {
      std::unique_lock<std::mutex> lock(mu_);
      done_cv_.wait(lock, [this] { return pending_ == 0; });
    }
    for (auto& e : errors_)
      if (e) std::rethrow_exception(e);
  }

 private:
  void worker_loop(int index) {
    std::uint64_t seen = 0;
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return stop_ || (generation_ != seen && index < static_cast<int>(jobs_.size())); });
        if (stop_) return;
        seen = generation_;
        job = jobs_[index];
      }
      std::exception_ptr error;
      try {
        if (job) job();
      } catch (...) {
        error = std::current_exception();
      }
      {
        std::unique_lock<std::mutex> lock(mu_);
        if (error) errors_[index] = error;
        if (--pending_ == 0) done_cv_.notify_all();
      }
    }
  }

  std::vector<std::thread> threads_;
  std::vector<std::function<void()>> jobs_;
  std::vector<std::exception_ptr> errors_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  std::uint64_t generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

}  // namespace arvae
