#include "vps/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "vps/conic.hpp"
#include "vps/nn.hpp"
#include "vps/parallel.hpp"
#include "vps/rng.hpp"

namespace vps {

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double best_seconds(F&& fn, int repeats) {
  fn();  // warmup
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  double worst = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a.val[i]) - b.val[i]));
  }
  return worst;
}

}  // namespace

std::vector<BenchRow> run_conic_bench(int batch, int channels, int height,
                                      int width, std::span<const int> worker_counts,
                                      int repeats, uint64_t seed) {
  Rng rng(seed);
  Tensor4 x(batch, channels, height, width);
  for (auto& v : x.val) v = static_cast<Real>(rng.uniform(-1, 1));
  auto w = Param::make("w", {channels, channels, 3, 3});
  auto b = Param::make("b", {channels});
  init_kaiming(w, channels * 9, rng);
  const auto frame = build_conic_frame(
      height, width, {rng.uniform(0, width - 1.0), rng.uniform(0, height - 1.0)});
  const std::span<const ConicFrame> frames{&frame, 1};
  const double mpix = static_cast<double>(batch) * height * width / 1e6;

  const int saved_workers = num_workers();
  std::vector<BenchRow> rows;

  set_num_workers(1);
  Tensor4 ref;
  const double tref = best_seconds([&] { ref = conic_conv_reference(x, frames, w, b); },
                                   std::max(1, repeats / 3));
  rows.push_back({"reference", 1, tref * 1e3, mpix / tref, 0.0});

  for (int workers : worker_counts) {
    set_num_workers(workers);
    Tensor4 fast;
    const double t = best_seconds([&] { fast = conic_conv_fast(x, frames, w, b); }, repeats);
    rows.push_back({"fast", workers, t * 1e3, mpix / t, max_abs_diff(ref, fast)});
  }
  set_num_workers(saved_workers);
  return rows;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
  out << "kernel,workers,best_ms,mpix_per_s,max_abs_diff\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%d,%.3f,%.3f,%.3g\n", r.kernel.c_str(),
                  r.workers, r.best_ms, r.mpix_per_s, r.max_abs_diff);
    out << buf;
  }
}

}  // namespace vps
