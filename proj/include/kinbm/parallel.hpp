// Deterministic data-parallel reduction: work is cut into a fixed number of
// chunks regardless of thread count and chunk partials are combined in index
// order, so sums are bit-identical whether run on 1 thread or many.
#pragma once

#include <cstddef>
#include <future>
#include <vector>

namespace kinbm {

inline constexpr int reduction_chunks = 64;

// fn(begin, end) -> double partial sum over [begin, end)
template <class Fn>
inline double chunked_sum(std::size_t n, int threads, Fn&& fn) {
    if (n == 0) return 0.0;
    const int chunks = static_cast<int>(std::min<std::size_t>(reduction_chunks, n));
    std::vector<double> partial(chunks);
    auto bounds = [&](int c) {
        const std::size_t lo = n * static_cast<std::size_t>(c) / chunks;
        const std::size_t hi = n * static_cast<std::size_t>(c + 1) / chunks;
        return std::pair<std::size_t, std::size_t>(lo, hi);
    };
    if (threads <= 1) {
        for (int c = 0; c < chunks; ++c) {
            auto [lo, hi] = bounds(c);
            partial[c] = fn(lo, hi);
        }
    } else {
        std::vector<std::future<double>> futures;
        futures.reserve(chunks);
        for (int c = 0; c < chunks; ++c) {
            auto [lo, hi] = bounds(c);
            futures.push_back(std::async(std::launch::deferred | std::launch::async,
                                         [&fn, lo, hi] { return fn(lo, hi); }));
        }
        for (int c = 0; c < chunks; ++c) partial[c] = futures[c].get();
    }
    double total = 0.0;
    for (int c = 0; c < chunks; ++c) total += partial[c];
    return total;
}

} // namespace kinbm
