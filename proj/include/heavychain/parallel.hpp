#pragma once

#include <cstddef>

namespace heavychain::par {

// Worker cap for all parallel loops. 0 means "use the OpenMP default".
// Results never depend on this value: every loop body writes to its own
// preassigned slot and derives its own RNG stream.
void set_jobs(int jobs);
int jobs();

namespace detail {
int resolve_threads();
}

// OpenMP-parallel index loop.
template <typename F>
void parallel_for(std::size_t count, F&& body) {
#ifdef _OPENMP
    const int nthreads = detail::resolve_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
    for (long long i = 0; i < static_cast<long long>(count); ++i)
        body(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < count; ++i) body(i);
#endif
}

// Serial reference path, kept so tests can compare against parallel_for.
template <typename F>
void serial_for(std::size_t count, F&& body) {
    for (std::size_t i = 0; i < count; ++i) body(i);
}

// Dispatch used by Monte Carlo drivers: serial when jobs()==1.
template <typename F>
void for_each_trial(std::size_t count, F&& body) {
    if (jobs() == 1)
        serial_for(count, body);
    else
        parallel_for(count, body);
}

} // namespace heavychain::par
