#include "flowplan/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace flowplan {
namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int n) { g_threads = n < 0 ? 0 : n; }

int thread_count() {
  const int n = g_threads.load();
  if (n > 0) return n;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace flowplan
