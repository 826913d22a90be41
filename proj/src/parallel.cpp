#include "udavi/parallel.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace udavi {

int worker_count() {
    if (const char* env = std::getenv("UDAVI_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    int workers = worker_count();
    if (workers <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    size_t w = std::min(size_t(workers), n);
    std::vector<std::thread> threads;
    threads.reserve(w);
    for (size_t k = 0; k < w; ++k) {
        threads.emplace_back([&, k]() {
            for (size_t i = k; i < n; i += w) fn(i);
        });
    }
    for (auto& t : threads) t.join();
}

}  // namespace udavi
