// Copyright 2026 The dtkg Authors
// SPDX-License-Identifier: Apache-2.0

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

namespace dtkg {

/// Fixed-size pool. `parallelism` counts the calling thread, so a pool of 1 runs everything inline.
///
/// parallel_for may be nested: the caller always drains indices itself and never waits on a task
/// that has not started, so an inner loop issued from a pool thread cannot deadlock.
class WorkerPool {
  public:
    explicit WorkerPool(std::size_t parallelism);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    [[nodiscard]] std::size_t parallelism() const noexcept { return threads_.size() + 1; }

    /// Runs fn(i) for i in [0, n). Rethrows the exception of the lowest failing index.
    template <typename Fn>
    void parallel_for(std::size_t n, Fn&& fn, std::size_t max_parallelism = 0);

  private:
    void submit(std::function<void()> task);
    void worker_loop();

    std::vector<std::thread> threads_;
    std::deque<std::function<void()>> queue_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stopping_ = false;
};

namespace detail {

struct LoopState {
    std::size_t n = 0;
    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex mutex;
    std::condition_variable cv;
    std::vector<std::exception_ptr> errors;
};

}  // namespace detail

template <typename Fn>
void WorkerPool::parallel_for(std::size_t n, Fn&& fn, std::size_t max_parallelism) {
    if (n == 0) return;
    auto state = std::make_shared<detail::LoopState>();
    state->n = n;
    state->errors.resize(n);

    auto drain = [state, &fn]() {
        std::size_t completed = 0;
        for (;;) {
            const std::size_t i = state->next.fetch_add(1, std::memory_order_relaxed);
            if (i >= state->n) break;
            try {
                fn(i);
            } catch (...) {
                state->errors[i] = std::current_exception();
            }
            ++completed;
        }
        if (completed == 0) return;
        std::lock_guard lock(state->mutex);
        state->done += completed;
        if (state->done == state->n) state->cv.notify_all();
    };

    std::size_t helpers = std::min(threads_.size(), n - 1);
    if (max_parallelism > 0) helpers = std::min(helpers, max_parallelism - 1);
    for (std::size_t h = 0; h < helpers; ++h) submit(drain);
    drain();
    {
        std::unique_lock lock(state->mutex);
        state->cv.wait(lock, [&] { return state->done == state->n; });
    }
    for (auto& e : state->errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Convenience: a temporary pool of `parallelism` threads running fn over [0, n).
template <typename Fn>
void run_indexed(std::size_t n, std::size_t parallelism, Fn&& fn) {
    if (n == 0) return;
    WorkerPool pool(std::min(parallelism, n));
    pool.parallel_for(n, std::forward<Fn>(fn));
}

}  // namespace dtkg
