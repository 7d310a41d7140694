#pragma once

#include <omp.h>

namespace radiofp {

// Number of OpenMP threads used by the parallel kernels. Every kernel writes
// into disjoint slots and reduces in index order, so results do not depend on
// this value.
inline void set_jobs(int jobs) { omp_set_num_threads(jobs < 1 ? 1 : jobs); }
inline int jobs() { return omp_get_max_threads(); }

}  // namespace radiofp
