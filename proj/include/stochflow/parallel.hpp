#pragma once

/// @file parallel.hpp
/// @brief Static-partition parallel loops and order-fixed reductions.
///
/// Work items write to their own output slots; reductions run afterwards in a
/// fixed pairwise order, so the worker count never changes a result bit.

#include <cstddef>
#include <cmath>
#include <span>
#include <type_traits>
#include <vector>

namespace stochflow {

/// Worker count used by parallel_for; 0 means hardware concurrency.
void set_worker_count(unsigned workers);
unsigned worker_count();

namespace detail {
void run_chunks(std::size_t n, void (*fn)(void*, std::size_t, std::size_t), void* ctx);
}

/// Calls body(i) for i in [0, n). Chunks are contiguous and static.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    if (n == 0) return;
    auto thunk = [](void* ctx, std::size_t begin, std::size_t end) {
        auto& b = *static_cast<std::remove_reference_t<Body>*>(ctx);
        for (std::size_t i = begin; i < end; ++i) b(i);
    };
    detail::run_chunks(n, thunk, static_cast<void*>(&body));
}

/// Pairwise (cascade) summation with a fixed split point.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

/// Sample mean and standard error of the mean.
struct MeanEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
};

inline MeanEstimate mean_and_stderr(std::span<const double> x) {
    MeanEstimate e;
    e.count = x.size();
    if (x.empty()) return e;
    e.mean = pairwise_sum(x) / static_cast<double>(x.size());
    if (x.size() < 2) return e;
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - e.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(x.size() - 1);
    e.stderr_ = std::sqrt(var / static_cast<double>(x.size()));
    return e;
}

}  // namespace stochflow
