// Acceptance suite: runs every release criterion end to end and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.
//
// Usage: acceptance <path-to-vpscan-binary> [scratch-dir] [--only N]
//
// The pipeline criterion (8) trains six models (three seeds, conic head and
// the plain ablation) on a 2000-image synthetic set and dominates the
// runtime; everything else finishes in seconds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fd_check.hpp"
#include "vps/bench.hpp"
#include "vps/conic.hpp"
#include "vps/config.hpp"
#include "vps/eval.hpp"
#include "vps/infer.hpp"
#include "vps/nn.hpp"
#include "vps/parallel.hpp"
#include "vps/pipeline.hpp"
#include "vps/sphere.hpp"
#include "vps/synth.hpp"

using namespace vps;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s -- %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void fill_random(std::vector<Real>& v, Rng& rng, double scale = 1.0) {
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-scale, scale));
}

Tensor4 random_tensor(int n, int c, int h, int w, Rng& rng, double scale = 1.0) {
  Tensor4 t(n, c, h, w);
  fill_random(t.val, rng, scale);
  return t;
}

double max_abs_diff(std::span<const Real> a, std::span<const Real> b) {
  double worst = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - b[i]));
  }
  return worst;
}

// ---- criterion 1: fast path equals the reference on randomized cases ----
void criterion_1() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(8));
    const int cin = 1 + static_cast<int>(rng.below(32));
    const int cout = 1 + static_cast<int>(rng.below(32));
    const int h = 4 + static_cast<int>(rng.below(29));
    const int w = 4 + static_cast<int>(rng.below(29));
    auto x = random_tensor(n, cin, h, w, rng);
    auto wt = Param::make("w", {cout, cin, 3, 3});
    auto bs = Param::make("b", {cout});
    fill_random(wt.w, rng, 0.5);
    fill_random(bs.w, rng, 0.5);
    double vx, vy;
    switch (trial % 4) {
      case 0:
        vx = rng.uniform(0, w - 1);
        vy = rng.uniform(0, h - 1);
        break;
      case 1:  // exactly on a pixel: the singular fallback
        vx = static_cast<double>(rng.below(w));
        vy = static_cast<double>(rng.below(h));
        break;
      case 2:  // on the boundary
        vx = rng.uniform() < 0.5 ? 0.0 : w - 1.0;
        vy = rng.uniform(0, h - 1);
        break;
      default:  // far outside
        vx = rng.uniform(-1e6, 1e6);
        vy = rng.uniform(-1e6, 1e6);
        break;
    }
    const auto f = build_conic_frame(h, w, {vx, vy});
    const auto ref = conic_conv_reference(x, {&f, 1}, wt, bs);
    const auto fast = conic_conv_fast(x, {&f, 1}, wt, bs);
    worst = std::max(worst, max_abs_diff(ref.val, fast.val));
  }
  const double secs = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "200 cases, max |fast - reference| = %.3g (< 1e-5), %.1f s (< 60)",
                worst, secs);
  report(1, worst < 1e-5 && secs < 60.0, buf);
}

// ---- criterion 2: finite-difference gradient fidelity, 32-bit ----
void criterion_2() {
  const auto t0 = Clock::now();
  const double tol = 1e-3;
  double worst = 0;
  std::string worst_op = "none";
  auto track = [&](const char* op, double err) {
    if (err > worst) {
      worst = err;
      worst_op = op;
    }
  };
  Rng rng(202);

  {  // conic conv
    auto x = random_tensor(1, 3, 8, 8, rng);
    x.ensure_grad();
    auto w = Param::make("w", {4, 3, 3, 3});
    auto b = Param::make("b", {4});
    fill_random(w.w, rng, 0.5);
    fill_random(b.w, rng, 0.5);
    const auto f = build_conic_frame(8, 8, {2.7, 4.4});
    std::vector<Real> proj(4 * 64);
    for (auto& p : proj) p = static_cast<Real>(rng.uniform(0.5, 1.0) * (rng.uniform() < 0.5 ? -1 : 1));
    auto loss = [&] {
      const auto y = conic_conv_fast(x, {&f, 1}, w, b);
      double s = 0;
      for (size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y.val[i]) * proj[i];
      return s;
    };
    auto y = conic_conv_fast(x, {&f, 1}, w, b);
    y.ensure_grad();
    for (size_t i = 0; i < y.size(); ++i) y.grad[i] = proj[i];
    conic_conv_backward(x, y, {&f, 1}, w, b);
    track("conic_x", testutil::fd_check(x.val, x.grad, loss, 1));
    track("conic_w", testutil::fd_check(w.w, w.g, loss, 2));
    track("conic_b", testutil::fd_check(b.w, b.g, loss, 3));
  }
  {  // conv2d
    auto x = random_tensor(2, 3, 7, 7, rng);
    x.ensure_grad();
    auto w = Param::make("w", {4, 3, 3, 3});
    auto b = Param::make("b", {4});
    fill_random(w.w, rng, 0.5);
    fill_random(b.w, rng, 0.5);
    std::vector<Real> proj(2 * 4 * 4 * 4);
    for (auto& p : proj) p = static_cast<Real>(rng.uniform(0.5, 1.0) * (rng.uniform() < 0.5 ? -1 : 1));
    auto loss = [&] {
      const auto y = conv2d_forward(x, w, b, 2, 1);
      double s = 0;
      for (size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y.val[i]) * proj[i];
      return s;
    };
    auto y = conv2d_forward(x, w, b, 2, 1);
    y.ensure_grad();
    for (size_t i = 0; i < y.size(); ++i) y.grad[i] = proj[i];
    conv2d_backward(x, y, w, b, 2, 1);
    track("conv2d_x", testutil::fd_check(x.val, x.grad, loss, 4));
    track("conv2d_w", testutil::fd_check(w.w, w.g, loss, 5));
    track("conv2d_b", testutil::fd_check(b.w, b.g, loss, 6));
  }
  {  // maxpool
    auto x = random_tensor(2, 2, 9, 9, rng);
    x.ensure_grad();
    std::vector<Real> proj(2 * 2 * 4 * 4);
    for (auto& p : proj) p = static_cast<Real>(rng.uniform(0.5, 1.0) * (rng.uniform() < 0.5 ? -1 : 1));
    auto loss = [&] {
      const auto y = maxpool2d_forward(x, 3, 2, nullptr);
      double s = 0;
      for (size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y.val[i]) * proj[i];
      return s;
    };
    std::vector<int32_t> am;
    auto y = maxpool2d_forward(x, 3, 2, &am);
    y.ensure_grad();
    for (size_t i = 0; i < y.size(); ++i) y.grad[i] = proj[i];
    maxpool2d_backward(x, y, am);
    track("maxpool_x", testutil::fd_check(x.val, x.grad, loss, 7));
  }
  {  // batchnorm (training mode)
    auto x = random_tensor(3, 2, 6, 6, rng);
    x.ensure_grad();
    auto scale = Param::make("s", {2});
    auto shift = Param::make("t", {2});
    auto rm = Param::make("rm", {2}, false);
    auto rv = Param::make("rv", {2}, false);
    scale.w = {Real(1.2), Real(0.8)};
    shift.w = {Real(0.1), Real(-0.3)};
    std::vector<Real> proj(x.size());
    for (auto& p : proj) p = static_cast<Real>(rng.uniform(0.5, 1.0) * (rng.uniform() < 0.5 ? -1 : 1));
    auto loss = [&] {
      auto rm2 = rm, rv2 = rv;
      const auto y = batchnorm_forward(x, scale, shift, rm2, rv2, true, Real(0.9), Real(1e-5), nullptr);
      double s = 0;
      for (size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y.val[i]) * proj[i];
      return s;
    };
    auto rm2 = rm, rv2 = rv;
    BatchNormCache cache;
    auto y = batchnorm_forward(x, scale, shift, rm2, rv2, true, Real(0.9), Real(1e-5), &cache);
    y.ensure_grad();
    for (size_t i = 0; i < y.size(); ++i) y.grad[i] = proj[i];
    batchnorm_backward(x, y, scale, shift, cache);
    track("batchnorm_x", testutil::fd_check(x.val, x.grad, loss, 8));
    track("batchnorm_scale", testutil::fd_check(scale.w, scale.g, loss, 9));
    track("batchnorm_shift", testutil::fd_check(shift.w, shift.g, loss, 10));
  }
  {  // linear
    auto x = random_tensor(3, 5, 2, 2, rng);
    x.ensure_grad();
    auto w = Param::make("w", {6, 20});
    auto b = Param::make("b", {6});
    fill_random(w.w, rng, 0.5);
    fill_random(b.w, rng, 0.5);
    std::vector<Real> proj(3 * 6);
    for (auto& p : proj) p = static_cast<Real>(rng.uniform(0.5, 1.0) * (rng.uniform() < 0.5 ? -1 : 1));
    auto loss = [&] {
      const auto y = linear_forward(x, w, b);
      double s = 0;
      for (size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y.val[i]) * proj[i];
      return s;
    };
    auto y = linear_forward(x, w, b);
    y.ensure_grad();
    for (size_t i = 0; i < y.size(); ++i) y.grad[i] = proj[i];
    linear_backward(x, y, w, b);
    track("linear_x", testutil::fd_check(x.val, x.grad, loss, 11));
    track("linear_w", testutil::fd_check(w.w, w.g, loss, 12));
    track("linear_b", testutil::fd_check(b.w, b.g, loss, 13));
  }
  {  // sigmoid + bce
    auto x = random_tensor(2, 8, 1, 1, rng, 2.0);
    x.ensure_grad();
    std::vector<Real> targets(x.size());
    for (auto& t : targets) t = rng.uniform() < 0.5 ? Real(0) : Real(1);
    auto loss = [&] {
      auto p = sigmoid_forward(x);
      return bce_loss(p, targets);
    };
    auto p = sigmoid_forward(x);
    bce_loss(p, targets);
    sigmoid_backward(x, p);
    track("sigmoid_bce_x", testutil::fd_check(x.val, x.grad, loss, 14));
  }

  const double secs = seconds_since(t0);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "32-bit worst rel err %.3g at %s (< 1e-3), %.1f s (< 120); "
                "the 64-bit half runs in acceptance_f64",
                worst, worst_op.c_str(), secs);
  report(2, worst < tol && secs < 120.0, buf);
}

// ---- criterion 3: far-center reduction to plain conv ----
void criterion_3() {
  Rng rng(303);
  auto x = random_tensor(2, 4, 16, 16, rng);
  auto w = Param::make("w", {5, 4, 3, 3});
  auto b = Param::make("b", {5});
  fill_random(w.w, rng, 0.5);
  fill_random(b.w, rng, 0.5);
  const auto f = build_conic_frame(16, 16, {1e6, 7.0});

  const auto conic = conic_conv_fast(x, {&f, 1}, w, b);
  const auto plain = conv2d_forward(x, w, b, 1, 1);
  double worst = max_abs_diff(conic.val, plain.val);

  auto gy = random_tensor(2, 5, 16, 16, rng);
  auto xc = x, xp = x;
  xc.ensure_grad();
  xp.ensure_grad();
  auto wc = w, wp = w;
  auto bc = b, bp = b;
  Tensor4 yc = conic, yp = plain;
  yc.grad = gy.val;
  yp.grad = gy.val;
  conic_conv_backward(xc, yc, {&f, 1}, wc, bc);
  conv2d_backward(xp, yp, wp, bp, 1, 1);
  worst = std::max(worst, max_abs_diff(xc.grad, xp.grad));
  worst = std::max(worst, max_abs_diff(wc.g, wp.g));
  worst = std::max(worst, max_abs_diff(bc.g, bp.g));

  char buf[120];
  std::snprintf(buf, sizeof(buf), "forward+backward max diff vs conv2d = %.3g (< 1e-3)", worst);
  report(3, worst < 1e-3, buf);
}

// ---- criterion 4: rotation equivariance about a centered v ----
void criterion_4() {
  Rng rng(404);
  const int s = 33;
  const double c = (s - 1) / 2.0;
  auto x = random_tensor(1, 3, s, s, rng);
  auto w = Param::make("w", {3, 3, 3, 3});
  auto b = Param::make("b", {3});
  fill_random(w.w, rng, 0.5);
  fill_random(b.w, rng, 0.5);
  const auto f = build_conic_frame(s, s, {c, c});
  const auto y = conic_conv_fast(x, {&f, 1}, w, b);

  Tensor4 xr(1, 3, s, s);
  for (int ch = 0; ch < 3; ++ch)
    for (int v = 0; v < s; ++v)
      for (int u = 0; u < s; ++u) {
        const int ru = static_cast<int>(c - (v - c));
        const int rv = static_cast<int>(c + (u - c));
        xr.at(0, ch, rv, ru) = x.at(0, ch, v, u);
      }
  const auto yr = conic_conv_fast(xr, {&f, 1}, w, b);

  double worst = 0;
  for (int ch = 0; ch < 3; ++ch)
    for (int v = 0; v < s; ++v)
      for (int u = 0; u < s; ++u) {
        // the pixel exactly at v keeps its fixed fallback frame, which no
        // fixed convention can make rotation-covariant; it is excluded
        if (u == static_cast<int>(c) && v == static_cast<int>(c)) continue;
        const int ru = static_cast<int>(c - (v - c));
        const int rv = static_cast<int>(c + (u - c));
        worst = std::max(worst, std::abs(static_cast<double>(yr.at(0, ch, rv, ru)) -
                                         y.at(0, ch, v, u)));
      }
  char buf[140];
  std::snprintf(buf, sizeof(buf),
                "33x33 centered v, max commute diff = %.3g (< 1e-4, singular pixel excluded)",
                worst);
  report(4, worst < 1e-4, buf);
}

// ---- criterion 5: sampler correctness ----
void criterion_5() {
  bool pass = true;
  std::string detail;

  const SphericalCap hemi{UnitDirection::raw(0, 0, 1), kPi / 2};
  Rng rng(505);
  // lattice containment and exact center start
  for (int trial = 0; trial < 20 && pass; ++trial) {
    const auto center = UnitDirection::normalized(rng.normal(), rng.normal(),
                                                  std::abs(rng.normal()) + 0.05);
    const double gamma = rng.uniform(0.02, kPi / 2);
    const auto pts = fibonacci_cap_sample({center, gamma}, 64);
    if (pts[0].x != center.x || pts[0].y != center.y || pts[0].z != center.z) {
      pass = false;
      detail = "lattice sample 0 is not the cap center";
    }
    for (const auto& p : pts) {
      if (angular_distance(p, center) > gamma + 1e-12) {
        pass = false;
        detail = "lattice sample escaped the cap";
      }
    }
  }

  // area-uniform KS statistic at 1e5 draws
  double ks = 0;
  if (pass) {
    const double gamma = 0.5;
    const SphericalCap cap{UnitDirection::normalized(0.2, -0.4, 1.0), gamma};
    const int n = 100000;
    std::vector<double> phis(n);
    for (int i = 0; i < n; ++i) {
      phis[i] = angular_distance(sample_cap_uniform(cap, rng), cap.center);
    }
    std::sort(phis.begin(), phis.end());
    const double denom = 1.0 - std::cos(gamma);
    for (int i = 0; i < n; ++i) {
      const double model = (1.0 - std::cos(phis[i])) / denom;
      ks = std::max(ks, std::abs(model - static_cast<double>(i) / n));
      ks = std::max(ks, std::abs(model - static_cast<double>(i + 1) / n));
    }
    if (ks >= 0.01) {
      pass = false;
      detail = "KS statistic too large";
    }
  }

  // covering angle vs the frozen brute-force constant (1e6-point oracle)
  const double frozen = 0.257246;
  double covering = 0;
  if (pass) {
    const auto pts = fibonacci_cap_sample(hemi, 64);
    covering = covering_angle(pts, hemi, 16384);
    if (std::abs(covering - frozen) >= 1e-3) {
      pass = false;
      detail = "covering angle drifted from the frozen constant";
    }
  }

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "center-start exact, caps contained, KS = %.4f (< 0.01), "
                "covering = %.6f vs frozen %.6f (|d| < 1e-3)%s%s",
                ks, covering, frozen, detail.empty() ? "" : "; ", detail.c_str());
  report(5, pass, buf);
}

// ---- criterion 6: oracle-scorer search ----
class OracleScorer : public CandidateScorer {
 public:
  explicit OracleScorer(const UnitDirection& gt) : gt_(gt) {}
  std::vector<double> score(std::span<const UnitDirection> candidates, int) override {
    std::vector<double> out(candidates.size());
    for (size_t i = 0; i < out.size(); ++i) {
      out[i] = -angular_distance(candidates[i], gt_);
    }
    return out;
  }

 private:
  UnitDirection gt_;
};

void criterion_6() {
  SearchConfig cfg;
  cfg.rounds = 4;
  cfg.samples_per_round = 64;
  cfg.rho = 1.2;
  const auto schedule = derive_threshold_schedule(cfg);

  Rng rng(606);
  const SphericalCap hemi{UnitDirection::raw(0, 0, 1), kPi / 2};
  int recovered = 0;
  bool count_ok = true;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const UnitDirection gt = sample_cap_uniform(hemi, rng);
    OracleScorer scorer(gt);
    const auto result = detect(scorer, cfg, schedule);
    const double err = angular_distance(result.detections[0].direction, gt);
    worst = std::max(worst, err);
    if (err < schedule.cap_angles.back()) ++recovered;
    if (result.scored_candidates != 256) count_ok = false;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%d/100 recovered within %.4f rad (worst %.5f), head evals per VP = 256: %s",
                recovered, schedule.cap_angles.back(), worst, count_ok ? "yes" : "NO");
  report(6, recovered == 100 && count_ok, buf);
}

// ---- criterion 7: metric correctness ----
void criterion_7() {
  constexpr double kDeg = kPi / 180.0;
  AACurve curve;
  curve.errors = {0.5 * kDeg, 1.5 * kDeg};
  const double aa = angle_accuracy(curve, 2 * kDeg);
  bool pass = std::abs(aa - 0.5) < 1e-12;

  Rng rng(707);
  const SphericalCap hemi{UnitDirection::raw(0, 0, 1), kPi / 2};
  int agreements = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<UnitDirection> preds, gts;
    for (int i = 0; i < 3; ++i) {
      preds.push_back(sample_cap_uniform(hemi, rng));
      gts.push_back(sample_cap_uniform(hemi, rng));
    }
    const auto matched = match_predictions(preds, gts);

    // exhaustive oracle: minimal total angle over all 3! permutations
    std::vector<int> perm{0, 1, 2};
    double best = 1e300;
    std::vector<double> oracle;
    do {
      double total = 0;
      std::vector<double> errs;
      for (int p = 0; p < 3; ++p) {
        errs.push_back(angular_distance(preds[p], gts[perm[p]]));
        total += errs.back();
      }
      if (total < best) {
        best = total;
        oracle = errs;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::sort(oracle.begin(), oracle.end());
    bool same = matched.errors.size() == 3;
    for (int i = 0; same && i < 3; ++i) {
      same = std::abs(matched.errors[i] - oracle[i]) < 1e-12;
    }
    if (same) ++agreements;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "AA(0.5deg,1.5deg; theta=2deg) = %.12f (= 0.5), oracle agreement %d/1000",
                aa, agreements);
  report(7, pass && agreements == 1000, buf);
}

// ---- criterion 8: desk-scale conic vs plain effect ----
RunConfig effect_config(uint64_t seed, bool plain) {
  RunConfig cfg;
  cfg.image_size = 128;
  cfg.seed = seed;
  cfg.backbone_stem = 16;
  cfg.feat_channels = 32;
  cfg.reduce_channels = 16;
  cfg.stage_channels = {16, 32, 64, 128};
  cfg.fc_dims = {128, 32};
  cfg.head_mode = plain ? "plain" : "conic";
  cfg.epochs = 6;
  cfg.batch_size = 8;
  cfg.lr = 8e-4;
  cfg.lr_decay_epoch = 5;
  cfg.val_fraction = 0.1;
  cfg.aa_thresholds_deg = {0.5, 1.0, 2.0, 10.0};
  return cfg;
}

void criterion_8(const fs::path& scratch) {
  const fs::path data_dir = scratch / "effect_data";
  {
    RunConfig synth_cfg = effect_config(4242, false);
    generate_dataset(synth_cfg.scene_spec(), 2000, data_dir.string());
  }

  struct SeedResult {
    uint64_t seed;
    double conic_median_deg, conic_aa2, plain_aa2;
    double conic_minutes, plain_minutes;
    bool pass;
  };
  std::vector<SeedResult> results;
  bool time_ok = true;

  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    SeedResult r{seed, 0, 0, 0, 0, 0, false};
    for (bool plain : {false, true}) {
      RunConfig cfg = effect_config(seed, plain);
      const std::string model_path =
          (scratch / ("effect_" + std::string(plain ? "plain" : "conic") +
                      std::to_string(seed) + ".vps")).string();
      const auto t0 = Clock::now();
      train_model(cfg, data_dir.string(), model_path, nullptr);
      const double minutes = seconds_since(t0) / 60.0;
      if (minutes > 30.0) time_ok = false;

      VpsModel model = VpsModel::load(model_path);
      const auto preds = detect_on_dataset(cfg, model, data_dir.string(), "val", nullptr);
      const auto eval = evaluate_predictions(cfg, preds, data_dir.string());
      double aa2 = 0;
      for (const auto& [thr, value] : eval.summary.aa) {
        if (std::abs(thr - 2.0 * kPi / 180.0) < 1e-9) aa2 = value;
      }
      if (plain) {
        r.plain_aa2 = aa2;
        r.plain_minutes = minutes;
      } else {
        r.conic_aa2 = aa2;
        r.conic_median_deg = eval.summary.median_error * 180.0 / kPi;
        r.conic_minutes = minutes;
      }
    }
    r.pass = r.conic_median_deg < 2.0 && (r.conic_aa2 - r.plain_aa2) >= 0.10;
    std::printf(
        "  seed %llu: conic median %.3f deg, AA2 conic %.3f vs plain %.3f "
        "(gap %+.3f), train %.1f/%.1f min -> %s\n",
        static_cast<unsigned long long>(r.seed), r.conic_median_deg, r.conic_aa2,
        r.plain_aa2, r.conic_aa2 - r.plain_aa2, r.conic_minutes, r.plain_minutes,
        r.pass ? "pass" : "fail");
    std::fflush(stdout);
    results.push_back(r);
  }

  int passing = 0;
  for (const auto& r : results) passing += r.pass ? 1 : 0;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "%d/3 seeds meet median < 2 deg and AA2 gap >= 10 points "
                "(majority needed), all trainings <= 30 min: %s",
                passing, time_ok ? "yes" : "NO");
  report(8, passing >= 2 && time_ok, buf);
}

// ---- criterion 9: kernel throughput and scaling ----
void criterion_9() {
  const std::vector<int> workers{1, 2, 4, 8};
  const auto rows = run_conic_bench(1, 64, 64, 64, workers, 5);
  double ref_rate = 0, fast1 = 0, fast_best = 0;
  for (const auto& r : rows) {
    if (r.kernel == "reference") ref_rate = r.mpix_per_s;
    if (r.kernel == "fast" && r.workers == 1) fast1 = r.mpix_per_s;
    if (r.kernel == "fast" && r.workers > 1) fast_best = std::max(fast_best, r.mpix_per_s);
  }
  const double speedup = fast1 / ref_rate;
  const double scaling = fast_best / fast1;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "fast/reference single-thread = %.1fx (>= 5), 1->8 worker scaling = "
                "%.2fx (>= 3; needs >= 8 hardware cores, this host has %d)",
                speedup, scaling, num_workers());
  report(9, speedup >= 5.0 && scaling >= 3.0, buf);
}

// ---- criterion 10: end-to-end pipeline determinism through the CLI ----
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_10(const std::string& vpscan, const fs::path& scratch) {
  const fs::path cfg_path = scratch / "determinism.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "image_size = 64\nseed = 9\nlines_per_vp = 6\nclutter_lines = 2\n"
           "backbone_stem = 8\nfeat_channels = 16\nreduce_channels = 8\n"
           "stage_channels = 8,16,32,64\nfc_dims = 64,32\nepochs = 2\n"
           "batch_size = 8\nlr_decay_epoch = 0\nval_fraction = 0.2\n";
  }
  auto run = [&](const fs::path& dir) -> bool {
    fs::create_directories(dir);
    const std::string base = "cd " + dir.string() + " && " + vpscan +
                             " --config " + cfg_path.string() + " ";
    std::string cmd = base + "synth --count 60 --out data > log.txt 2>&1";
    if (std::system(cmd.c_str()) != 0) return false;
    cmd = base + "train --dataset data --out model.vps >> log.txt 2>&1";
    if (std::system(cmd.c_str()) != 0) return false;
    cmd = base + "detect --model model.vps --dataset data --split val --out preds.json >> log.txt 2>&1";
    if (std::system(cmd.c_str()) != 0) return false;
    cmd = base + "eval --predictions preds.json --dataset data --out-prefix result >> log.txt 2>&1";
    return std::system(cmd.c_str()) == 0;
  };

  const fs::path run1 = scratch / "determinism_run1";
  const fs::path run2 = scratch / "determinism_run2";
  const bool ok = run(run1) && run(run2);
  bool model_same = false, summary_same = false;
  if (ok) {
    const auto m1 = slurp(run1 / "model.vps");
    model_same = !m1.empty() && m1 == slurp(run2 / "model.vps");
    const auto s1 = slurp(run1 / "result.summary.json");
    summary_same = !s1.empty() && s1 == slurp(run2 / "result.summary.json");
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "CLI runs completed: %s, model bytes identical: %s, AA summary identical: %s",
                ok ? "yes" : "NO", model_same ? "yes" : "NO", summary_same ? "yes" : "NO");
  report(10, ok && model_same && summary_same, buf);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <vpscan-binary> [scratch-dir] [--only N]\n");
    return 2;
  }
  const std::string vpscan = argv[1];
  fs::path scratch = fs::temp_directory_path() / "vpscan_acceptance";
  int only = 0;
  for (int i = 2; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      scratch = arg;
    }
  }
  fs::create_directories(scratch);
  const auto t0 = Clock::now();

  auto want = [&](int n) { return only == 0 || only == n; };
  if (want(1)) criterion_1();
  if (want(2)) criterion_2();
  if (want(3)) criterion_3();
  if (want(4)) criterion_4();
  if (want(5)) criterion_5();
  if (want(6)) criterion_6();
  if (want(7)) criterion_7();
  if (want(8)) criterion_8(scratch);
  if (want(9)) criterion_9();
  if (want(10)) criterion_10(vpscan, scratch);

  std::printf("acceptance total: %s (%d failed), %.1f s\n",
              g_failures == 0 ? "PASS" : "FAIL", g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
