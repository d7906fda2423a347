#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mecmtl {

enum class ExecMode { serial, parallel };

struct ExecPolicy {
  ExecMode mode = ExecMode::parallel;
  int threads = 0;  // 0 = runtime default
};

/// Static-schedule loop over [0, n). Bodies must write disjoint state; all
/// reductions happen serially after the loop so results are identical in
/// both modes.
template <typename F>
void parallel_for(int n, const ExecPolicy& p, F&& body) {
#ifdef _OPENMP
  if (p.mode == ExecMode::parallel) {
    if (p.threads > 0) {
#pragma omp parallel for schedule(static) num_threads(p.threads)
      for (int i = 0; i < n; ++i) body(i);
    } else {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) body(i);
    }
    return;
  }
#endif
  for (int i = 0; i < n; ++i) body(i);
}

}  // namespace mecmtl
