#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace admitlab {

inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) {
        return requested;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Evaluates fn(i) for i in [0, n) on a pool of workers. Results are stored
// by index, so the output never depends on scheduling. The first exception
// thrown by any task is rethrown after all workers stop.
template <typename Fn>
auto parallel_map(std::size_t n, unsigned workers, Fn&& fn) {
    using R = std::invoke_result_t<Fn&, std::size_t>;
    std::vector<R> out(n);
    const unsigned pool = std::min<unsigned>(resolve_workers(workers), static_cast<unsigned>(std::max<std::size_t>(n, 1)));
    if (pool <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = fn(i);
        }
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (unsigned w = 0; w < pool; ++w) {
        threads.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) {
                    return;
                }
                try {
                    out[i] = fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    failed = true;
                }
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
    return out;
}

}  // namespace admitlab
