#pragma once

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace patchstyle {

/// Caps the worker count used by the library's parallel loops. Values < 1
/// leave the runtime default.
inline void set_thread_count(int threads) {
#if defined(_OPENMP)
    if (threads >= 1) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

[[nodiscard]] inline int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace patchstyle
