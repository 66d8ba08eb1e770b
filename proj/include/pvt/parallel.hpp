#pragma once

#include <cstdint>
#include <type_traits>

namespace pvt {

// Worker cap for parallel_for. 0 resets to the hardware default.
void set_max_threads(int n);
int max_threads();

namespace detail {
void run_parallel(std::int64_t n, void* ctx, void (*fn)(void*, std::int64_t));
}

// Runs fn(i) for i in [0, n). Iterations must be independent: each writes its
// own slot and the caller reduces in a fixed order afterwards, so results are
// bit-identical for every thread count.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
    detail::run_parallel(n, &fn, [](void* ctx, std::int64_t i) {
        (*static_cast<std::remove_reference_t<Fn>*>(ctx))(i);
    });
}

}  // namespace pvt
