#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace leakbench {

/// Process-wide cap on worker threads (the CLI's --jobs). 1 = serial.
inline std::size_t& max_jobs() {
    static std::size_t jobs = 1;
    return jobs;
}

namespace parallel_detail {
inline thread_local bool in_worker = false;
}

/// Runs body(i) for i in [0, n). Work units are claimed dynamically, so
/// callers must write results by index only; that makes output independent
/// of the schedule. Nested calls from inside a worker run serially. The first exception thrown by any unit is rethrown.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, std::size_t jobs = 0) {
    if (jobs == 0) jobs = max_jobs();
    jobs = std::min(jobs, n);
    if (parallel_detail::in_worker) jobs = 1;
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        const bool outer = parallel_detail::in_worker;
        parallel_detail::in_worker = true;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                break;
            }
        }
        parallel_detail::in_worker = outer;
    };
    std::vector<std::thread> threads;
    threads.reserve(jobs - 1);
    for (std::size_t t = 1; t < jobs; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace leakbench
