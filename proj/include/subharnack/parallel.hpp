#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace subharnack {

/// Worker count for path-level parallelism. Results never depend on it.
struct Exec {
    std::size_t jobs = 1;
};

/// Runs fn(i) for i in [0, n) on up to `exec.jobs` threads. fn must only
/// write to slot i of its output; the first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max<std::size_t>(exec.jobs, 1), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace subharnack
