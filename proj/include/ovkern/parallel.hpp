#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace ovkern {

/// Thread budget: OVKERN_THREADS if set (0 = auto), else hardware concurrency.
inline unsigned thread_budget() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("OVKERN_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return hw;
}

/// Run fn(i) for i in [0, count). Each index owns its output slot, so results
/// are deterministic under any schedule. Exceptions propagate from index 0's
/// chunk; other chunks fail the whole call via rethrow after join.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const unsigned threads = std::min<std::size_t>(thread_budget(), count);
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (std::size_t i = t; i < count; i += threads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

} // namespace ovkern
