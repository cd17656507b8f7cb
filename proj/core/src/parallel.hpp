#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace parcelsteer::detail {

// Runs body(i) for i in [0, n). Work is dealt round-robin so row-triangular
// loops stay balanced; each index is handled by exactly one thread, so
// results written per-index are independent of the thread count.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_per_thread = 16) {
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t threads = std::min(hw, std::max<std::size_t>(1, n / min_per_thread));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) body(i);
        });
    }
}

} // namespace parcelsteer::detail
