#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mf {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caps the worker pool used by all parallel kernels. 0 restores the
// OpenMP default. Thread-safe.
void set_max_workers(int workers);
int max_workers();

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Maps a 64-bit word to (0,1), never hitting either endpoint.
inline double to_unit_interval(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

// Parallel loop over [0, n). The body must only write to slots owned by
// its own index; under that contract results do not depend on the
// worker count. Exceptions are captured and rethrown after the loop
// joins (they must not escape an OpenMP region).
inline constexpr std::int64_t kParallelThreshold = 512;

// min_parallel: smallest n worth a thread team; lower it when each
// iteration carries a lot of work (chunked reductions pass 2).
template <class F>
void par_for(std::int64_t n, F&& body, std::int64_t min_parallel = kParallelThreshold) {
#ifdef _OPENMP
    const int w = max_workers();
    if (n < min_parallel || n < 2 || w == 1) {
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr error;
    auto guarded = [&](std::int64_t i) {
        try {
            body(i);
        } catch (...) {
#pragma omp critical(mf_par_for_error)
            if (!error) error = std::current_exception();
        }
    };
    if (w > 0) {
#pragma omp parallel for schedule(static) num_threads(w)
        for (std::int64_t i = 0; i < n; ++i) guarded(i);
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) guarded(i);
    }
    if (error) std::rethrow_exception(error);
#else
    for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

// Reductions are chunked at a fixed size and the partials are combined
// in chunk order, so sums are bitwise identical for any worker count.
inline constexpr std::int64_t kReductionChunk = 4096;

// acc[j] += sum over i of the j-th contribution of `add(i, local)`.
// `add` must only touch `local`.
template <class F>
void det_accumulate(std::int64_t n, std::span<double> acc, F&& add) {
    const std::size_t k = acc.size();
    if (n <= kReductionChunk) {
        for (std::int64_t i = 0; i < n; ++i) add(i, acc);
        return;
    }
    const std::int64_t nchunks = (n + kReductionChunk - 1) / kReductionChunk;
    std::vector<double> partial(static_cast<std::size_t>(nchunks) * k, 0.0);
    par_for(
        nchunks,
        [&](std::int64_t c) {
            std::span<double> local(partial.data() + static_cast<std::size_t>(c) * k, k);
            const std::int64_t lo = c * kReductionChunk;
            const std::int64_t hi = std::min(n, lo + kReductionChunk);
            for (std::int64_t i = lo; i < hi; ++i) add(i, local);
        },
        2);
    for (std::int64_t c = 0; c < nchunks; ++c)
        for (std::size_t j = 0; j < k; ++j) acc[j] += partial[static_cast<std::size_t>(c) * k + j];
}

double det_sum(std::span<const double> xs);
double det_mean(std::span<const double> xs);

}  // namespace mf
