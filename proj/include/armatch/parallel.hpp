#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace armatch {

/// Runs body(i) for i in [0, n). Iterations must be independent; each one
/// writes only its own output slot, so results do not depend on scheduling.
template <typename Body>
void parallel_for(std::ptrdiff_t n, Body&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#endif
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace armatch
