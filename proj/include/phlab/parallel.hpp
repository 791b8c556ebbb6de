#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace phlab {

/// Worker count for the OpenMP kernels. workers == 1 runs the loop inline.
struct Exec {
  int workers = 1;
};

/// 0 means: PHLAB_WORKERS from the environment, else the OpenMP default.
int resolve_workers(int requested);

/// Runs body(i) for i in [0, n). Iterations must write only to slot i of
/// their output so that results do not depend on the schedule. The first
/// exception thrown by any iteration is rethrown after the loop.
template <class Body>
void parallel_for(std::size_t n, const Exec& exec, Body&& body) {
  std::exception_ptr failure;
  std::mutex guard;
  const long count = static_cast<long>(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(exec.workers > 0 ? exec.workers : 1) \
    if (exec.workers > 1)
#endif
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace phlab
