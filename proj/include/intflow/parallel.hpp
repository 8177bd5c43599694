#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace intflow {

/// Number of worker threads for a requested count (0 = one per hardware thread).
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/** Run fn(i) for i in [begin, end) on up to n_threads workers.
 *
 * The range is split into contiguous chunks, one per worker, so each index
 * is processed by exactly one thread and the work done for a given index
 * does not depend on the thread count. Results written to per-index slots
 * are therefore identical for any n_threads.
 */
template <class Fn>
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end, int n_threads, Fn&& fn) {
    const std::ptrdiff_t count = end - begin;
    if (count <= 0) return;
    const int workers = std::min<std::ptrdiff_t>(resolve_threads(n_threads), count);
    if (workers <= 1) {
        for (std::ptrdiff_t i = begin; i < end; ++i) fn(i);
        return;
    }
    const std::ptrdiff_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const std::ptrdiff_t lo = begin + w * chunk;
        const std::ptrdiff_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::ptrdiff_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace intflow
