#include "vps/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vps {

namespace {

UnitDirection on_cap(const UnitDirection& center, const UnitDirection& a,
                     const UnitDirection& b, double cos_phi, double theta) {
  const double sin_phi = std::sqrt(std::max(0.0, 1.0 - cos_phi * cos_phi));
  const double ct = std::cos(theta), st = std::sin(theta);
  return UnitDirection::raw(
      cos_phi * center.x + sin_phi * (ct * a.x + st * b.x),
      cos_phi * center.y + sin_phi * (ct * a.y + st * b.y),
      cos_phi * center.z + sin_phi * (ct * a.z + st * b.z));
}

}  // namespace

std::pair<UnitDirection, UnitDirection> orthonormal_basis(const UnitDirection& n) {
  // Cross against the coordinate axis with the smallest |component| of n.
  const double ax = std::abs(n.x), ay = std::abs(n.y), az = std::abs(n.z);
  UnitDirection e;
  if (ax <= ay && ax <= az) {
    e = UnitDirection::raw(1, 0, 0);
  } else if (ay <= az) {
    e = UnitDirection::raw(0, 1, 0);
  } else {
    e = UnitDirection::raw(0, 0, 1);
  }
  UnitDirection a = cross(n, e);
  const double an = std::sqrt(dot(a, a));
  a = UnitDirection::raw(a.x / an, a.y / an, a.z / an);
  const UnitDirection b = cross(n, a);  // unit because n and a are orthonormal
  return {a, b};
}

std::vector<UnitDirection> fibonacci_cap_sample(const SphericalCap& cap, int count) {
  if (count < 1) throw std::invalid_argument("fibonacci_cap_sample: count must be >= 1");
  if (!cap.valid()) throw std::invalid_argument("fibonacci_cap_sample: invalid cap");

  const auto [a, b] = orthonormal_basis(cap.center);
  const double one_minus_cos = 1.0 - std::cos(cap.polar_angle);
  const double golden = (1.0 + std::sqrt(5.0)) * kPi;

  std::vector<UnitDirection> out;
  out.reserve(count);
  out.push_back(cap.center);  // n = 0: cos(phi) == 1 exactly
  for (int n = 1; n < count; ++n) {
    const double cos_phi = 1.0 - one_minus_cos * static_cast<double>(n) / count;
    out.push_back(on_cap(cap.center, a, b, cos_phi, golden * n));
  }
  return out;
}

double covering_angle(std::span<const UnitDirection> samples,
                      const SphericalCap& cap, int density_multiplier) {
  if (samples.empty()) throw std::invalid_argument("covering_angle: no samples");
  if (density_multiplier < 1) throw std::invalid_argument("covering_angle: bad density");

  const auto grid = fibonacci_cap_sample(
      cap, density_multiplier * static_cast<int>(samples.size()));

  double worst_cos = 1.0;  // max distance == min |cos|
  for (const UnitDirection& w : grid) {
    double best = 0.0;
    for (const UnitDirection& d : samples) {
      best = std::max(best, std::abs(dot(w, d)));
    }
    worst_cos = std::min(worst_cos, best);
  }
  return std::acos(std::min(1.0, worst_cos));
}

UnitDirection sample_cap_uniform(const SphericalCap& cap, Rng& rng,
                                 double annulus_inner) {
  if (!(annulus_inner >= 0.0) || annulus_inner >= cap.polar_angle) {
    throw std::invalid_argument("sample_cap_uniform: bad annulus bounds");
  }
  const double cos_lo = std::cos(cap.polar_angle);
  const double cos_hi = std::cos(annulus_inner);
  const auto [a, b] = orthonormal_basis(cap.center);
  const double cos_phi = rng.uniform(cos_lo, cos_hi);
  const double theta = rng.uniform(0.0, 2.0 * kPi);
  return on_cap(cap.center, a, b, cos_phi, theta).canonical();
}

std::vector<CandidateLabel> sample_training_candidates(
    std::span<const UnitDirection> ground_truths, double gamma, int n_pos,
    int n_neg, int n_rand, std::span<const double> thresholds, Rng& rng) {
  if (!(gamma > 0.0) || gamma > kPi / 4) {
    throw std::invalid_argument(
        "sample_training_candidates: gamma must be in (0, pi/4]");
  }
  if (n_pos < 0 || n_neg < 0 || n_rand < 0) {
    throw std::invalid_argument("sample_training_candidates: negative count");
  }

  std::vector<CandidateLabel> out;
  out.reserve(ground_truths.size() * (n_pos + n_neg) + n_rand);

  auto push_labeled = [&](const UnitDirection& w) {
    double nearest = kPi;
    for (const UnitDirection& g : ground_truths) {
      nearest = std::min(nearest, angular_distance(w, g));
    }
    CandidateLabel c;
    c.direction = w;
    c.labels.resize(thresholds.size());
    for (size_t i = 0; i < thresholds.size(); ++i) {
      c.labels[i] = nearest < thresholds[i] ? 1 : 0;
    }
    out.push_back(std::move(c));
  };

  for (const UnitDirection& g : ground_truths) {
    for (int i = 0; i < n_pos; ++i) {
      push_labeled(sample_cap_uniform({g, gamma}, rng));
    }
    for (int i = 0; i < n_neg; ++i) {
      push_labeled(sample_cap_uniform({g, 2.0 * gamma}, rng, gamma));
    }
  }
  const SphericalCap hemisphere{UnitDirection::raw(0, 0, 1), kPi / 2};
  for (int i = 0; i < n_rand; ++i) {
    push_labeled(sample_cap_uniform(hemisphere, rng));
  }
  return out;
}

}  // namespace vps
