#pragma once

#include <cstdint>

namespace augscale::par {

// Execution mode for batch kernels. Every parallel kernel has a serial path
// that produces bit-identical output; tests compare the two and the bench
// target times them. Parallel loops only ever write disjoint output slots,
// and reductions are performed serially over per-item buffers, so results do
// not depend on the thread count.
enum class Exec { serial, parallel };

// Worker cap: min(omp_get_max_threads(), AUGSCALE_THREADS if set).
int thread_cap();

namespace detail {
void run_indexed(std::int64_t n, void (*fn)(std::int64_t, void*), void* ctx, Exec exec);
}

template <typename F>
void for_index(std::int64_t n, Exec exec, F&& body) {
    F local = static_cast<F&&>(body);
    detail::run_indexed(
        n, [](std::int64_t i, void* ctx) { (*static_cast<F*>(ctx))(i); }, &local, exec);
}

}  // namespace augscale::par
