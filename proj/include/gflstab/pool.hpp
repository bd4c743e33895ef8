#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace gflstab {

/// Worker-count resolution: explicit flag, then GFLSTAB_WORKERS, then the
/// hardware count. Always at least 1.
inline unsigned resolve_workers(int flag_value = 0) {
    if (flag_value > 0) return static_cast<unsigned>(flag_value);
    if (const char* env = std::getenv("GFLSTAB_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Work is handed out
/// through a shared counter, so results must be written to preallocated
/// per-index slots; fn must not throw.
inline void run_parallel(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> threads;
    const unsigned spawn = static_cast<unsigned>(
        std::min<std::size_t>(workers, n) - 1);
    threads.reserve(spawn);
    for (unsigned w = 0; w < spawn; ++w) threads.emplace_back(drain);
    drain();
    for (std::thread& t : threads) t.join();
}

}  // namespace gflstab
