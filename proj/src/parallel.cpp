#include "pvt/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pvt {

namespace {
std::atomic<int> g_max_threads{0};
}

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

int max_threads() {
    int n = g_max_threads.load();
    if (n > 0) return n;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace detail {

void run_parallel(std::int64_t n, void* ctx, void (*fn)(void*, std::int64_t)) {
    const int nt = max_threads();
    if (nt <= 1 || n <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(ctx, i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
    for (std::int64_t i = 0; i < n; ++i) fn(ctx, i);
#else
    for (std::int64_t i = 0; i < n; ++i) fn(ctx, i);
#endif
}

}  // namespace detail
}  // namespace pvt
