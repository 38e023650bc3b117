#pragma once

#include <ostream>
#include <span>
#include <vector>

#include "vps/geometry.hpp"

namespace vps {

struct MatchedPair {
  int pred = -1;
  int gt = -1;
  double error = 0;  // radians
};

// Angular errors over an evaluation set, sorted ascending. Unmatched
// predictions contribute the metric's maximum (pi/2); unmatched ground
// truths are only counted.
struct AACurve {
  std::vector<double> errors;
  std::vector<MatchedPair> pairs;  // per-image matches; cleared by merge
  int unmatched_gts = 0;

  void merge(const AACurve& other);
};

// Greedy one-to-one assignment by ascending pairwise angular distance.
AACurve match_predictions(std::span<const UnitDirection> preds,
                          std::span<const UnitDirection> gts);

// Area under the empirical fraction-below curve on [0, theta], divided by
// theta. Exact over the step function; empty curves evaluate to 0.
double angle_accuracy(const AACurve& curve, double theta);

struct EvalSummary {
  std::vector<std::pair<double, double>> aa;  // (threshold radians, AA)
  double mean_error = 0;    // radians, penalties included
  double median_error = 0;  // lower median
  int unmatched_gts = 0;
  size_t count = 0;
};

EvalSummary summarize(const AACurve& curve, std::span<const double> thresholds);

// CSV rows (error_deg, fraction_below) tracing the curve's breakpoints.
void write_aa_curve_csv(std::ostream& out, const AACurve& curve);

}  // namespace vps
