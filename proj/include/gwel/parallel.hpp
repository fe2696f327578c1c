#pragma once

// Minimal parallel-for over an index range.
//
// Work is split into fixed-size blocks claimed from an atomic cursor, so the
// partition never depends on the thread count. Callers must keep per-index
// state disjoint (write to slot i only) and fold results afterwards in index
// order; every public result in this project is bit-identical for any number
// of threads.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gwel {

// Thread cap: GW_ELECTRIC_THREADS if set (minimum 1), else hardware cores.
inline unsigned max_threads() {
    if (const char* env = std::getenv("GW_ELECTRIC_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// fn(begin, end) is invoked on half-open sub-ranges of [0, count).
inline void parallel_for_blocks(std::uint64_t count, std::uint64_t block,
                                const std::function<void(std::uint64_t, std::uint64_t)>& fn) {
    if (count == 0) return;
    const unsigned threads = static_cast<unsigned>(
        std::min<std::uint64_t>(max_threads(), (count + block - 1) / block));
    if (threads <= 1) {
        for (std::uint64_t b = 0; b < count; b += block)
            fn(b, std::min(count, b + block));
        return;
    }

    std::atomic<std::uint64_t> cursor{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::uint64_t begin = cursor.fetch_add(block);
            if (begin >= count) return;
            try {
                fn(begin, std::min(count, begin + block));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// Per-index version for coarse tasks (one tree per index).
inline void parallel_for_each(std::uint64_t count,
                              const std::function<void(std::uint64_t)>& fn) {
    parallel_for_blocks(count, 1, [&](std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) fn(i);
    });
}

} // namespace gwel
