#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace mms {
namespace parallel {

inline std::atomic<int>& thread_count_ref() {
    static std::atomic<int> n{1};
    return n;
}

inline void set_threads(int n) { thread_count_ref().store(n < 1 ? 1 : n); }
inline int threads() { return thread_count_ref().load(); }

// Runs fn(i) for i in [0, n). Work is handed out by an atomic counter, so
// the assignment of rows to threads is nondeterministic -- callers must
// write results into per-row slots and combine them in index order.
template <typename Fn>
void for_each_row(std::size_t n, Fn&& fn) {
    const int nt = threads();
    if (nt <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int spawn = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(nt), n));
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

// Sequential in-order fold of per-row partial sums. Matches the rounding of
// a plain row-major double loop with a per-row accumulator, at any thread
// count.
inline double ordered_sum(const std::vector<double>& partials) {
    double total = 0.0;
    for (double v : partials) total += v;
    return total;
}

// Per-row map followed by the ordered fold above.
template <typename RowFn>
double sum_over_rows(std::size_t n, RowFn&& row) {
    std::vector<double> partials(n, 0.0);
    for_each_row(n, [&](std::size_t i) { partials[i] = row(i); });
    return ordered_sum(partials);
}

// Per-row max, combined in index order.
template <typename RowFn>
double max_over_rows(std::size_t n, double init, RowFn&& row) {
    std::vector<double> partials(n, init);
    for_each_row(n, [&](std::size_t i) { partials[i] = row(i); });
    double best = init;
    for (double v : partials) best = v > best ? v : best;
    return best;
}

}  // namespace parallel
}  // namespace mms
