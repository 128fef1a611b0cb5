#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace addtrend {

// Runs fn(0..ntasks-1) on up to nthreads workers (static stride split).
// Tasks must be independent; results are identical for any worker count.
inline void parallel_for(int ntasks, int nthreads, const std::function<void(int)>& fn) {
    if (nthreads <= 1 || ntasks <= 1) {
        for (int t = 0; t < ntasks; ++t) fn(t);
        return;
    }
    const int workers = std::min(nthreads, ntasks);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int t = w; t < ntasks; t += workers) fn(t);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace addtrend
