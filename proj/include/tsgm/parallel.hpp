#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tsgm {

// Splits [0, rows) into contiguous chunks, one per worker. fn(begin, end) must
// only touch rows in its chunk; outputs are then identical for any thread count.
template <typename Fn>
void parallel_rows(int rows, int threads, Fn&& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || rows <= 1) {
        fn(0, rows);
        return;
    }
    const int workers = std::min(threads, rows);
    const int chunk = (rows + workers - 1) / workers;

    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const int begin = w * chunk;
        const int end = std::min(rows, begin + chunk);
        if (begin >= end)
            break;
        pool.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

}  // namespace tsgm
