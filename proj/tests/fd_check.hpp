#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "vps/real.hpp"
#include "vps/rng.hpp"

namespace vps::testutil {

// Central-difference gradient checks.
//
// The difference quotient carries round-off noise of roughly
// eps(Real) * |loss| / (2h). In the float build that floor sits near 1e-4
// for typical losses, which drowns individual small gradient entries, so the
// 32-bit suites probe random +-1 directions instead: the directional
// derivative has the magnitude of the full gradient norm and a wrong kernel
// formula perturbs it far above the noise. The double build runs the
// per-entry variant, whose floor is nine orders lower, at 1e-6 tolerance.

// Per-entry central differences; entries whose signal is within 1000x of the
// round-off floor are skipped as unmeasurable.
inline double fd_max_rel_err(std::span<Real> values,
                             std::span<const Real> analytic_in,
                             const std::function<double()>& loss, double h) {
  // copy: the loss re-run may touch the buffer the caller's span points into
  const std::vector<Real> analytic(analytic_in.begin(), analytic_in.end());
  const double base = std::abs(loss());
  const double eps = static_cast<double>(std::numeric_limits<Real>::epsilon());
  const double guard = 1000.0 * eps * std::max(1e-3, base) / (2.0 * h);

  double worst = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    const Real saved = values[i];
    values[i] = saved + static_cast<Real>(h);
    const double lp = loss();
    values[i] = saved - static_cast<Real>(h);
    const double lm = loss();
    values[i] = saved;
    const double fd = (lp - lm) / (2.0 * h);
    const double an = static_cast<double>(analytic[i]);
    const double scale = std::max(std::abs(fd), std::abs(an));
    if (scale < guard) continue;
    worst = std::max(worst, std::abs(fd - an) / scale);
  }
  return worst;
}

// Random +-1 directional probes: perturbs every entry at once and compares
// the directional derivative against the projection of the analytic
// gradient.
inline double fd_directional_max_rel_err(std::span<Real> values,
                                         std::span<const Real> analytic_in,
                                         const std::function<double()>& loss,
                                         double h, int probes, uint64_t seed) {
  Rng rng(seed);
  const std::vector<Real> analytic(analytic_in.begin(), analytic_in.end());
  std::vector<Real> saved(values.begin(), values.end());
  std::vector<double> dir(values.size());
  double gnorm = 0.0;
  for (Real g : analytic) gnorm += static_cast<double>(g) * g;
  gnorm = std::sqrt(gnorm);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    double an = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
      dir[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      an += dir[i] * static_cast<double>(analytic[i]);
    }
    for (size_t i = 0; i < values.size(); ++i) {
      values[i] = saved[i] + static_cast<Real>(h * dir[i]);
    }
    const double lp = loss();
    for (size_t i = 0; i < values.size(); ++i) {
      values[i] = saved[i] - static_cast<Real>(h * dir[i]);
    }
    const double lm = loss();
    std::copy(saved.begin(), saved.end(), values.begin());
    const double fd = (lp - lm) / (2.0 * h);
    // A +-1 projection of the gradient has standard deviation |g|_2; probes
    // that cancel far below that scale carry no signal and only expose the
    // forward pass's float noise, so they are skipped.
    const double scale = std::max(std::abs(fd), std::abs(an));
    if (scale < std::max(0.25 * gnorm, 1e-9)) continue;
    worst = std::max(worst, std::abs(fd - an) / scale);
  }
  return worst;
}

// Build-appropriate default: directional probes in float, per-entry in
// double.
inline constexpr double kFdStep = sizeof(Real) == 4 ? 1e-3 : 1e-4;
inline constexpr double kFdTol = sizeof(Real) == 4 ? 1e-3 : 1e-6;

inline double fd_check(std::span<Real> values, std::span<const Real> analytic,
                       const std::function<double()>& loss, uint64_t seed) {
  if constexpr (sizeof(Real) == 8) {
    (void)seed;
    return fd_max_rel_err(values, analytic, loss, kFdStep);
  } else {
    return fd_directional_max_rel_err(values, analytic, loss, kFdStep, 24, seed);
  }
}

}  // namespace vps::testutil
