// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace refqsr {

int worker_count(int n) {
    if (n <= 1) return 1;
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("REFQSR_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < hw) hw = cap;
    }
    return hw < n ? hw : n;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = worker_count(n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace refqsr
