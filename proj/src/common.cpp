#include "mf/common.hpp"

#include <atomic>

namespace mf {

namespace {
std::atomic<int> g_max_workers{0};
}

void set_max_workers(int workers) {
    if (workers < 0) throw std::invalid_argument("set_max_workers: negative worker count");
    g_max_workers.store(workers, std::memory_order_relaxed);
}

int max_workers() { return g_max_workers.load(std::memory_order_relaxed); }

double det_sum(std::span<const double> xs) {
    double acc[1] = {0.0};
    det_accumulate(static_cast<std::int64_t>(xs.size()), acc, [&](std::int64_t i, std::span<double> a) {
        a[0] += xs[static_cast<std::size_t>(i)];
    });
    return acc[0];
}

double det_mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("det_mean: empty input");
    return det_sum(xs) / static_cast<double>(xs.size());
}

}  // namespace mf
