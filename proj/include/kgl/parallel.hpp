#pragma once

#include <omp.h>

namespace kgl {

// Caps the worker count used by every OpenMP kernel; n <= 0 restores the runtime default.
inline void set_threads(int n) {
  if (n <= 0) n = omp_get_num_procs();
  omp_set_num_threads(n);
}

inline int max_threads() { return omp_get_max_threads(); }

}  // namespace kgl
