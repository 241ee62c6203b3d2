// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/parallel.h>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace tnrf {

int worker_count() {
    if (const char *env = std::getenv("TNRF_THREADS")) {
        try {
            int n = std::stoi(env);
            if (n > 0)
                return n;
        } catch (const std::exception &) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

int chunk_count(std::size_t n) {
    return int(std::min<std::size_t>(std::max<std::size_t>(n, 1), std::size_t(worker_count())));
}

void parallel_chunks(std::size_t n,
                     const std::function<void(int, std::size_t, std::size_t)> &fn) {
    const int chunks = chunk_count(n);
    auto bounds = [&](int c) { return n * std::size_t(c) / std::size_t(chunks); };
    if (chunks == 1) {
        fn(0, 0, n);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(chunks - 1);
    auto run = [&](int c) {
        try {
            fn(c, bounds(c), bounds(c + 1));
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error)
                error = std::current_exception();
        }
    };
    for (int c = 1; c < chunks; ++c)
        threads.emplace_back(run, c);
    run(0);
    for (auto &t : threads)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

}  // namespace tnrf
