#include "augscale/par.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace augscale::par {

int thread_cap() {
#ifdef _OPENMP
    int cap = omp_get_max_threads();
#else
    int cap = 1;
#endif
    if (const char* env = std::getenv("AUGSCALE_THREADS")) {
        try {
            int requested = std::stoi(env);
            if (requested >= 1) cap = std::min(cap, requested);
        } catch (...) {
            // ignore malformed values, keep the OpenMP default
        }
    }
    return std::max(cap, 1);
}

namespace detail {

void run_indexed(std::int64_t n, void (*fn)(std::int64_t, void*), void* ctx, Exec exec) {
    if (exec == Exec::serial) {
        for (std::int64_t i = 0; i < n; ++i) fn(i, ctx);
        return;
    }
#ifdef _OPENMP
    const int threads = thread_cap();
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i) fn(i, ctx);
#else
    for (std::int64_t i = 0; i < n; ++i) fn(i, ctx);
#endif
}

}  // namespace detail

}  // namespace augscale::par
