#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace parsplit {

/// Fixed set of threads that run index-parallel loops.
///
/// Task t always runs on worker t % workers, and the calling thread acts
/// as worker 0. Exceptions are collected per task; the one with the lowest
/// task index is rethrown after the loop completes.
class WorkerPool {
public:
    explicit WorkerPool(std::size_t workers = 1) : workers_(workers == 0 ? 1 : workers)
    {
        for (std::size_t w = 1; w < workers_; ++w) {
            threads_.emplace_back([this, w] { worker_loop(w); });
        }
    }

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    ~WorkerPool()
    {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
            ++generation_;
        }
        start_cv_.notify_all();
        for (auto& t : threads_) {
            t.join();
        }
    }

    std::size_t workers() const noexcept { return workers_; }

    void run(std::size_t n_tasks, const std::function<void(std::size_t)>& task)
    {
        errors_.assign(n_tasks, nullptr);
        if (workers_ == 1 || n_tasks <= 1) {
            for (std::size_t t = 0; t < n_tasks; ++t) {
                run_one(task, t);
            }
            rethrow_first();
            return;
        }
        {
            std::lock_guard lock(mutex_);
            task_ = &task;
            n_tasks_ = n_tasks;
            pending_ = workers_ - 1;
            ++generation_;
        }
        start_cv_.notify_all();
        run_share(0);
        {
            std::unique_lock lock(mutex_);
            done_cv_.wait(lock, [this] { return pending_ == 0; });
            task_ = nullptr;
        }
        rethrow_first();
    }

private:
    void run_one(const std::function<void(std::size_t)>& task, std::size_t t)
    {
        try {
            task(t);
        } catch (...) {
            errors_[t] = std::current_exception();
        }
    }

    void run_share(std::size_t w)
    {
        for (std::size_t t = w; t < n_tasks_; t += workers_) {
            run_one(*task_, t);
        }
    }

    void worker_loop(std::size_t w)
    {
        std::size_t seen = 0;
        for (;;) {
            {
                std::unique_lock lock(mutex_);
                start_cv_.wait(lock, [&] { return generation_ != seen; });
                seen = generation_;
                if (stopping_) {
                    return;
                }
            }
            run_share(w);
            {
                std::lock_guard lock(mutex_);
                --pending_;
            }
            done_cv_.notify_one();
        }
    }

    void rethrow_first()
    {
        for (auto& e : errors_) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    std::size_t workers_;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable start_cv_;
    std::condition_variable done_cv_;
    std::size_t generation_ = 0;
    std::size_t pending_ = 0;
    bool stopping_ = false;
    const std::function<void(std::size_t)>* task_ = nullptr;
    std::size_t n_tasks_ = 0;
    std::vector<std::exception_ptr> errors_;
};

} // namespace parsplit
