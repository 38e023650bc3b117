#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "vps/geometry.hpp"
#include "vps/rng.hpp"

namespace vps {

// Region of the unit sphere within polar_angle of center.
struct SphericalCap {
  UnitDirection center;
  double polar_angle = 0.0;  // radians, in (0, pi/2]

  bool valid() const { return polar_angle > 0.0 && polar_angle <= kPi / 2 + 1e-12; }
};

// A candidate line direction plus one boolean per angle threshold: true iff
// the nearest ground-truth direction lies within that threshold.
struct CandidateLabel {
  UnitDirection direction;
  std::vector<uint8_t> labels;
};

// Deterministic pair (a, b) with {a, b, n} orthonormal and a x b == n.
std::pair<UnitDirection, UnitDirection> orthonormal_basis(const UnitDirection& n);

// Golden-angle lattice of `count` directions covering the cap. Sample 0 is
// the cap center exactly; later samples spiral outward, staying strictly
// inside the cap. Deterministic.
std::vector<UnitDirection> fibonacci_cap_sample(const SphericalCap& cap, int count);

// Largest distance from any point of the cap to its nearest sample,
// estimated by brute force over a dense golden-angle grid of
// density_multiplier * samples.size() points on the cap.
double covering_angle(std::span<const UnitDirection> samples,
                      const SphericalCap& cap,
                      int density_multiplier = 256);

// Area-uniform draw from a cap (annulus_inner == 0) or from the annulus
// between annulus_inner and cap.polar_angle.
UnitDirection sample_cap_uniform(const SphericalCap& cap, Rng& rng,
                                 double annulus_inner = 0.0);

// Training candidates for a set of ground-truth directions: per ground
// truth, n_pos draws within gamma and n_neg draws in the (gamma, 2*gamma)
// annulus, plus n_rand hemisphere-uniform extras. Every candidate is
// labeled against each threshold using its nearest ground truth.
// Requires gamma <= pi/4 so the annulus stays inside the metric's range.
std::vector<CandidateLabel> sample_training_candidates(
    std::span<const UnitDirection> ground_truths, double gamma, int n_pos,
    int n_neg, int n_rand, std::span<const double> thresholds, Rng& rng);

}  // namespace vps
