#pragma once

// Worker-count policy for the OpenMP kernels.

#include <omp.h>

#include <cstdlib>
#include <string>

namespace cyclolms::detail {

/// omp_get_max_threads(), capped by CYCLO_LMS_THREADS when it is a positive
/// integer.
inline int worker_threads() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("CYCLO_LMS_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0 && cap < n) n = cap;
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return n;
}

}  // namespace cyclolms::detail
