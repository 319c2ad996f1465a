#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace mbm {

// Runs fn(i) for every index in [0, n) on `workers` threads.  Each index owns
// its output slot, so results are identical for any worker count or schedule.
template <class F>
void parallel_for_index(std::size_t n, int workers, F&& fn) {
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    constexpr std::size_t chunk = 8;
    auto body = [&] {
        for (;;) {
            std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            std::size_t end = std::min(begin + chunk, n);
            for (std::size_t i = begin; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
}

}  // namespace mbm
