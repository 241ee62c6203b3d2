// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace tnrf {

// Worker count: TNRF_THREADS if set and positive, else hardware concurrency.
int worker_count();

// Splits [0, n) into `worker_count()` contiguous chunks (at most n) and runs
// fn(chunk, begin, end) for each, one thread per chunk. The chunking depends
// only on n and the worker count, so per-chunk buffers reduced in chunk order
// give results independent of thread scheduling.
void parallel_chunks(std::size_t n, const std::function<void(int, std::size_t, std::size_t)> &fn);

// Number of chunks parallel_chunks(n, ...) will use.
int chunk_count(std::size_t n);

template <typename F> void parallel_for(std::size_t n, F &&fn) {
    parallel_chunks(n, [&](int, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            fn(i);
    });
}

}  // namespace tnrf
