#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rigidity::parallel {

// Process-wide worker count for block scans. Results never depend on it:
// block boundaries are fixed by the caller and partial results are folded
// in block order.
void set_jobs(unsigned jobs);
unsigned jobs();

// Applies body(begin, end) to consecutive blocks of [0, n).
template <class Body>
void for_blocks(std::size_t n, std::size_t block, Body&& body)
{
    if (n == 0) return;
    block = std::max<std::size_t>(block, 1);
    const std::size_t count = (n + block - 1) / block;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(jobs(), count));
    if (workers <= 1) {
        for (std::size_t b = 0; b < count; ++b) body(b * block, std::min(n, (b + 1) * block));
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto worker = [&] {
        for (;;) {
            std::size_t b = next.fetch_add(1);
            if (b >= count) return;
            try {
                body(b * block, std::min(n, (b + 1) * block));
            } catch (...) {
                std::lock_guard lock(failure_lock);
                if (!failure) failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// Folds per-block results left to right. `body(begin, end)` returns a Result.
template <class Result, class Body, class Combine>
Result reduce_blocks(std::size_t n, std::size_t block, Result init, Body&& body, Combine&& combine)
{
    if (n == 0) return init;
    block = std::max<std::size_t>(block, 1);
    const std::size_t count = (n + block - 1) / block;
    std::vector<Result> partial(count, init);
    for_blocks(n, block, [&](std::size_t begin, std::size_t end) {
        partial[begin / block] = body(begin, end);
    });
    Result acc = std::move(init);
    for (auto& r : partial) acc = combine(std::move(acc), std::move(r));
    return acc;
}

} // namespace rigidity::parallel
