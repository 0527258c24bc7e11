#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cstk {

inline unsigned resolve_workers(unsigned workers)
{
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    return workers;
}

// Calls fn(i) for i in [0, n). Each index is handled by exactly one worker;
// fn must only write to storage owned by its index.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& fn)
{
    workers = unsigned(std::min<std::size_t>(resolve_workers(workers), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
        body();
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace cstk
