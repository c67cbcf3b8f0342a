#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace gfdpf {

/// Bounded worker pool with a blocking, caller-participating parallel_for.
///
/// The calling thread always claims chunks of its own loop, so a loop body may
/// itself call parallel_for on the same pool (area tasks running level-parallel
/// solves) without starving: every caller can finish its loop alone and only
/// waits for chunks that other threads are already executing.
class ThreadPool {
 public:
  /// `threads` counts the caller; a pool of 1 runs everything inline.
  explicit ThreadPool(std::size_t threads = std::thread::hardware_concurrency())
      : size_(std::max<std::size_t>(threads, 1)) {
    workers_.reserve(size_ - 1);
    for (std::size_t t = 1; t < size_; ++t) workers_.emplace_back([this] { worker_loop(); });
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  std::size_t size() const noexcept { return size_; }

  /// Calls body(i) for i in [begin, end). Chunks of `grain` indices are the unit
  /// of work; the first exception thrown by any chunk is rethrown here.
  template <typename F>
  void parallel_for(std::size_t begin, std::size_t end, std::size_t grain, F&& body) {
    if (end <= begin) return;
    grain = std::max<std::size_t>(grain, 1);
    const std::size_t count = end - begin;
    if (size_ == 1 || count <= grain) {
      for (std::size_t i = begin; i < end; ++i) body(i);
      return;
    }
    auto job = std::make_shared<Job>();
    job->next = begin;
    job->end = end;
    job->grain = grain;
    job->remaining = count;
    job->body = [&body](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    };
    const std::size_t chunks = (count + grain - 1) / grain;
    const std::size_t helpers = std::min(workers_.size(), chunks - 1);
    {
      std::lock_guard lock(mutex_);
      for (std::size_t h = 0; h < helpers; ++h) queue_.push_back(job);
    }
    if (helpers == 1)
      cv_.notify_one();
    else
      cv_.notify_all();
    job->work();
    {
      std::unique_lock lock(job->mutex);
      job->done.wait(lock, [&] { return job->remaining.load() == 0; });
    }
    if (job->error) std::rethrow_exception(job->error);
  }

 private:
  struct Job {
    std::atomic<std::size_t> next{0};
    std::size_t end = 0;
    std::size_t grain = 1;
    std::atomic<std::size_t> remaining{0};
    std::function<void(std::size_t, std::size_t)> body;
    std::mutex mutex;
    std::condition_variable done;
    std::exception_ptr error;

    void work() {
      for (;;) {
        const std::size_t lo = next.fetch_add(grain);
        if (lo >= end) return;
        const std::size_t hi = std::min(lo + grain, end);
        try {
          body(lo, hi);
        } catch (...) {
          std::lock_guard lock(mutex);
          if (!error) error = std::current_exception();
        }
        if (remaining.fetch_sub(hi - lo) == hi - lo) {
          std::lock_guard lock(mutex);
          done.notify_all();
        }
      }
    }
  };

  void worker_loop() {
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (stopping_ && queue_.empty()) return;
        job = std::move(queue_.front());
        queue_.pop_front();
      }
      job->work();
    }
  }

  std::size_t size_;
  std::vector<std::thread> workers_;
  std::deque<std::shared_ptr<Job>> queue_;
  std::mutex mutex_;
  std::condition_variable cv_;
  bool stopping_ = false;
};

}  // namespace gfdpf
