#include "splitcop/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace splitcop {

int max_threads() {
    static const int cached = [] {
        int hw = static_cast<int>(std::thread::hardware_concurrency());
        if (hw <= 0)
            hw = 1;
        if (const char* env = std::getenv("SPLITCOP_THREADS")) {
            const int req = std::atoi(env);
            if (req >= 1)
                return std::min(req, 4 * hw);
        }
        return hw;
    }();
    return cached;
}

namespace {
thread_local bool inside_parallel_region = false;
}

void parallel_for_blocks(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0)
        return;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_threads()), n);
    if (workers <= 1 || inside_parallel_region) {
        fn(0, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end)
            break;
        pool.emplace_back([&fn, begin, end] {
            inside_parallel_region = true;
            fn(begin, end);
        });
    }
    for (auto& t : pool)
        t.join();
}

} // namespace splitcop
