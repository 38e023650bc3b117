#include "vps/parallel.hpp"

#include <algorithm>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vps {

namespace {
int g_workers = 0;
}

void set_num_workers(int n) {
  g_workers = std::max(0, n);
#ifdef _OPENMP
  omp_set_num_threads(num_workers());
#endif
}

int num_workers() {
  if (g_workers > 0) return g_workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace vps
