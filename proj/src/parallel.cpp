#include "stochflow/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace stochflow {

namespace {
std::atomic<unsigned> g_workers{1};
}

void set_worker_count(unsigned workers) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    g_workers.store(workers);
}

unsigned worker_count() { return g_workers.load(); }

namespace detail {

void run_chunks(std::size_t n, void (*fn)(void*, std::size_t, std::size_t), void* ctx) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        fn(ctx, 0, n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t begin = std::min(n, w * chunk);
        const std::size_t end = std::min(n, begin + chunk);
        if (begin < end) pool.emplace_back([=] { fn(ctx, begin, end); });
    }
    fn(ctx, 0, std::min(n, chunk));
}

}  // namespace detail
}  // namespace stochflow
