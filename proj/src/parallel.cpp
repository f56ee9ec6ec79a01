#include "csod/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace csod {

int max_threads() {
    static const int n = [] {
        const char* env = std::getenv("CSOD_THREADS");
        if (!env || !*env) return 1;
        int v = std::atoi(env);
        if (v < 1) return 1;
        unsigned hw = std::thread::hardware_concurrency();
        return std::min(v, hw ? static_cast<int>(hw) : v);
    }();
    return n;
}

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
    const std::int64_t count = end - begin;
    if (count <= 0) return;
    const int threads = max_threads();
    if (threads == 1 || count < 256) {
        fn(begin, end);
        return;
    }
    const int t = static_cast<int>(std::min<std::int64_t>(threads, count));
    const std::int64_t block = (count + t - 1) / t;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t - 1));
    for (int i = 1; i < t; ++i) {
        std::int64_t lo = begin + i * block;
        std::int64_t hi = std::min(end, lo + block);
        if (lo >= hi) break;
        pool.emplace_back(fn, lo, hi);
    }
    fn(begin, std::min(end, begin + block));
    for (auto& th : pool) th.join();
}

}  // namespace csod
