#include "heavychain/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace heavychain::par {

namespace {
std::atomic<int> g_jobs{0};
}

void set_jobs(int jobs) { g_jobs.store(jobs < 0 ? 0 : jobs); }

int jobs() { return g_jobs.load(); }

namespace detail {
int resolve_threads() {
#ifdef _OPENMP
    const int cap = g_jobs.load();
    return cap > 0 ? cap : omp_get_max_threads();
#else
    return 1;
#endif
}
} // namespace detail

} // namespace heavychain::par
