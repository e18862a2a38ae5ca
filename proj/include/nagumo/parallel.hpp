#pragma once

// Execution policy for embarrassingly parallel batches. Every kernel that
// accepts a policy is a pure map: iteration i reads shared inputs and writes
// slot i, nothing else, so the OpenMP schedule cannot change results and the
// serial policy stays the bit-for-bit reference.

#include <cstddef>
#include <exception>
#include <utility>

#if defined(NAGUMO_HAVE_OPENMP)
#include <omp.h>
#endif

namespace nagumo {

enum class Exec { Serial, OpenMP };

inline const char* to_string(Exec e) { return e == Exec::Serial ? "serial" : "openmp"; }

inline bool openmp_compiled() {
#if defined(NAGUMO_HAVE_OPENMP)
    return true;
#else
    return false;
#endif
}

inline int max_threads() {
#if defined(NAGUMO_HAVE_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Runs fn(0) .. fn(n-1). Exceptions cannot cross an OpenMP region, so the
// first one is captured and rethrown after the loop drains.
template <typename Fn>
void par_for(std::size_t n, Fn&& fn, Exec exec = Exec::Serial) {
#if defined(NAGUMO_HAVE_OPENMP)
    if (exec == Exec::OpenMP) {
        std::exception_ptr first;
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            try {
                fn(static_cast<std::size_t>(i));
            } catch (...) {
#pragma omp critical
                if (!first) first = std::current_exception();
            }
        }
        if (first) std::rethrow_exception(first);
        return;
    }
#else
    (void)exec;
#endif
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace nagumo
