#pragma once

#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lfd {

/*
 * Execution policy for the data-parallel inner loops (per-epoch gradient
 * cells, grid accumulation, Monte-Carlo evaluation). Serial is the reference
 * implementation; Parallel distributes iterations over OpenMP threads.
 *
 * Both policies produce bit-identical results by construction: every
 * iteration owns its RNG substream and output slot, and floating-point
 * reductions go through fixed-size blocks combined in index order, so
 * nothing depends on thread count or scheduling.
 */
enum class ExecPolicy { Serial, Parallel };

template <typename F>
void parallel_for(ExecPolicy policy, std::int64_t n, F&& body) {
#ifdef _OPENMP
    if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
#else
    (void)policy;
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        body(i);
    }
}

inline constexpr std::int64_t kReduceBlock = 4096;

// Sum of body(i) for i in [0, n). Iterations are grouped into fixed blocks;
// each block is summed left to right and block results are combined in block
// order, so the value is independent of the execution policy.
template <typename F>
double deterministic_block_sum(ExecPolicy policy, std::int64_t n, F&& body) {
    if (n <= 0) return 0.0;
    const std::int64_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
    if (blocks == 1) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < n; ++i) acc += body(i);
        return acc;
    }
    std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
    parallel_for(policy, blocks, [&](std::int64_t b) {
        const std::int64_t lo = b * kReduceBlock;
        const std::int64_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
        double acc = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) acc += body(i);
        partial[static_cast<std::size_t>(b)] = acc;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace lfd
