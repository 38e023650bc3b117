#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace vps {

struct BenchRow {
  std::string kernel;  // "reference" or "fast"
  int workers = 1;
  double best_ms = 0;
  double mpix_per_s = 0;      // output pixels per second, in millions
  double max_abs_diff = 0;    // against the reference output
};

// Times the conic kernels on a random input. The reference runs
// single-threaded; the fast path runs once per requested worker count.
std::vector<BenchRow> run_conic_bench(int batch, int channels, int height,
                                      int width, std::span<const int> worker_counts,
                                      int repeats, uint64_t seed = 1);

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);

}  // namespace vps
