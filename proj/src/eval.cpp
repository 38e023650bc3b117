#include "vps/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "vps/real.hpp"

namespace vps {

void AACurve::merge(const AACurve& other) {
  errors.insert(errors.end(), other.errors.begin(), other.errors.end());
  std::sort(errors.begin(), errors.end());
  unmatched_gts += other.unmatched_gts;
  pairs.clear();
}

namespace {

// Exact minimal-total assignment by permutation enumeration over the larger
// side. Fine up to six per side; the pipeline never exceeds three.
std::vector<MatchedPair> assign_exact(const std::vector<std::vector<double>>& dist,
                                      int np, int ng) {
  const bool permute_gts = np <= ng;
  const int big = permute_gts ? ng : np;
  const int small = permute_gts ? np : ng;
  std::vector<int> idx(big);
  for (int i = 0; i < big; ++i) idx[i] = i;
  double best_total = 1e300;
  std::vector<MatchedPair> best;
  do {
    double total = 0;
    for (int i = 0; i < small; ++i) {
      total += permute_gts ? dist[i][idx[i]] : dist[idx[i]][i];
    }
    if (total < best_total - 1e-15) {
      best_total = total;
      best.clear();
      for (int i = 0; i < small; ++i) {
        const int p = permute_gts ? i : idx[i];
        const int g = permute_gts ? idx[i] : i;
        best.push_back({p, g, dist[p][g]});
      }
    }
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

// Greedy fallback for large sets: take pairs in ascending distance order.
std::vector<MatchedPair> assign_greedy(const std::vector<std::vector<double>>& dist,
                                       int np, int ng) {
  struct Entry {
    double d;
    int p, g;
  };
  std::vector<Entry> entries;
  for (int p = 0; p < np; ++p) {
    for (int g = 0; g < ng; ++g) entries.push_back({dist[p][g], p, g});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.p != b.p) return a.p < b.p;
    return a.g < b.g;
  });
  std::vector<char> pred_used(np, 0), gt_used(ng, 0);
  std::vector<MatchedPair> out;
  for (const Entry& e : entries) {
    if (pred_used[e.p] || gt_used[e.g]) continue;
    pred_used[e.p] = gt_used[e.g] = 1;
    out.push_back({e.p, e.g, e.d});
  }
  return out;
}

}  // namespace

AACurve match_predictions(std::span<const UnitDirection> preds,
                          std::span<const UnitDirection> gts) {
  const int np = static_cast<int>(preds.size());
  const int ng = static_cast<int>(gts.size());
  std::vector<std::vector<double>> dist(np, std::vector<double>(ng));
  for (int p = 0; p < np; ++p) {
    for (int g = 0; g < ng; ++g) dist[p][g] = angular_distance(preds[p], gts[g]);
  }

  // One-to-one assignment minimizing the total angle. Exact when both sides
  // are small enough to enumerate; the sets here are K <= 3, so the greedy
  // branch only guards pathological inputs.
  AACurve curve;
  const bool exact = np > 0 && ng > 0 && np <= 6 && ng <= 6;
  curve.pairs = exact ? assign_exact(dist, np, ng)
                      : (np && ng ? assign_greedy(dist, np, ng)
                                  : std::vector<MatchedPair>{});

  std::vector<char> pred_used(np, 0), gt_used(ng, 0);
  for (const auto& pair : curve.pairs) {
    pred_used[pair.pred] = gt_used[pair.gt] = 1;
    curve.errors.push_back(pair.error);
  }
  for (int p = 0; p < np; ++p) {
    if (!pred_used[p]) curve.errors.push_back(kPi / 2);  // maximum of the metric
  }
  for (int g = 0; g < ng; ++g) {
    if (!gt_used[g]) ++curve.unmatched_gts;
  }
  std::sort(curve.errors.begin(), curve.errors.end());
  return curve;
}

double angle_accuracy(const AACurve& curve, double theta) {
  if (!(theta > 0)) throw std::invalid_argument("angle_accuracy: theta must be > 0");
  const auto& e = curve.errors;
  const size_t m = e.size();
  if (m == 0) return 0.0;

  double acc = 0.0, prev = 0.0;
  size_t i = 0;
  while (i < m && e[i] <= theta) {
    acc += (e[i] - prev) * static_cast<double>(i) / m;
    prev = e[i];
    ++i;
  }
  acc += (theta - prev) * static_cast<double>(i) / m;
  return acc / theta;
}

EvalSummary summarize(const AACurve& curve, std::span<const double> thresholds) {
  EvalSummary s;
  s.count = curve.errors.size();
  s.unmatched_gts = curve.unmatched_gts;
  for (double t : thresholds) s.aa.emplace_back(t, angle_accuracy(curve, t));
  if (!curve.errors.empty()) {
    double total = 0;
    for (double e : curve.errors) total += e;
    s.mean_error = total / static_cast<double>(curve.errors.size());
    s.median_error = curve.errors[(curve.errors.size() - 1) / 2];  // lower median
  }
  return s;
}

void write_aa_curve_csv(std::ostream& out, const AACurve& curve) {
  out << "error_deg,fraction_below\n";
  const size_t m = curve.errors.size();
  out << "0.000000,0.000000\n";
  for (size_t i = 0; i < m; ++i) {
    const double deg = curve.errors[i] * 180.0 / kPi;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", deg,
                  static_cast<double>(i + 1) / static_cast<double>(m));
    out << buf;
  }
}

}  // namespace vps
