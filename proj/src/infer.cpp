#include "vps/infer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vps {

ThresholdSchedule derive_threshold_schedule(const SearchConfig& cfg) {
  if (!cfg.valid()) throw std::invalid_argument("derive_threshold_schedule: bad config");
  ThresholdSchedule s;
  s.cap_angles.push_back(kPi / 2);
  const UnitDirection pole = UnitDirection::raw(0, 0, 1);
  for (int r = 0; r < cfg.rounds; ++r) {
    const SphericalCap cap{pole, s.cap_angles.back()};
    const auto lattice = fibonacci_cap_sample(cap, cfg.samples_per_round);
    const double next = cfg.rho * covering_angle(lattice, cap, cfg.covering_grid);
    if (!(next < s.cap_angles.back())) {
      throw std::runtime_error(
          "derive_threshold_schedule: schedule does not decrease; "
          "samples_per_round too small for rho");
    }
    s.cap_angles.push_back(next);
  }
  s.thresholds.assign(s.cap_angles.begin() + 1, s.cap_angles.end());
  return s;
}

ModelScorer::ModelScorer(VpsModel& model, const Tensor4& image,
                         const CameraIntrinsics& K)
    : model_(model), K_(K) {
  if (image.n != 1) throw std::invalid_argument("ModelScorer: one image at a time");
  features_ = model_.backbone_forward(image, false);
}

std::vector<double> ModelScorer::score(std::span<const UnitDirection> candidates,
                                       int threshold_index) {
  if (threshold_index < 0 || threshold_index >= model_.config().num_thresholds) {
    throw std::invalid_argument("ModelScorer: threshold index out of range");
  }
  std::vector<VpsModel::CandidateRef> refs;
  refs.reserve(candidates.size());
  for (const auto& d : candidates) refs.push_back({0, d});
  const Tensor4 probs = model_.head_forward(features_, refs, K_, false);
  head_evaluations_ += static_cast<int64_t>(candidates.size());

  std::vector<double> out(candidates.size());
  const int R = model_.config().num_thresholds;
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<double>(probs.val[i * R + threshold_index]);
  }
  return out;
}

TopkSelection select_topk_separated(std::span<const double> scores,
                                    std::span<const UnitDirection> directions,
                                    int k, double min_separation) {
  if (scores.size() != directions.size()) {
    throw std::invalid_argument("select_topk_separated: size mismatch");
  }
  if (k < 1) throw std::invalid_argument("select_topk_separated: k must be >= 1");

  std::vector<int> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  // descending score, index as the deterministic tie-break
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  TopkSelection sel;
  for (int idx : order) {
    if (static_cast<int>(sel.indices.size()) == k) break;
    bool ok = true;
    for (int chosen : sel.indices) {
      if (angular_distance(directions[idx], directions[chosen]) < min_separation) {
        ok = false;
        break;
      }
    }
    if (ok) sel.indices.push_back(idx);
  }
  sel.underfilled = static_cast<int>(sel.indices.size()) < k;
  return sel;
}

DetectResult detect(CandidateScorer& scorer, const SearchConfig& cfg,
                    const ThresholdSchedule& schedule) {
  if (!cfg.valid()) throw std::invalid_argument("detect: bad config");
  if (static_cast<int>(schedule.thresholds.size()) != cfg.rounds) {
    throw std::invalid_argument("detect: schedule/config round mismatch");
  }

  DetectResult result;

  // round 1: hemisphere scan
  const SphericalCap hemisphere{UnitDirection::raw(0, 0, 1), schedule.cap_angles[0]};
  const auto base = fibonacci_cap_sample(hemisphere, cfg.samples_per_round);
  const auto base_scores = scorer.score(base, 0);
  result.scored_candidates += static_cast<int64_t>(base.size());

  const double min_sep =
      cfg.min_separation > 0 ? cfg.min_separation : 2.0 * schedule.cap_angles[1];
  const auto seeds =
      select_topk_separated(base_scores, base, cfg.top_k, cfg.top_k > 1 ? min_sep : 0.0);
  result.underfilled = seeds.underfilled;

  for (int seed_idx : seeds.indices) {
    UnitDirection current = base[seed_idx];
    double score = base_scores[seed_idx];
    for (int r = 2; r <= cfg.rounds; ++r) {
      const SphericalCap cap{current, schedule.cap_angles[r - 1]};
      const auto samples = fibonacci_cap_sample(cap, cfg.samples_per_round);
      const auto scores = scorer.score(samples, r - 1);
      result.scored_candidates += static_cast<int64_t>(samples.size());
      int best = 0;
      for (size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = static_cast<int>(i);
      }
      current = samples[best];
      score = scores[best];
    }
    result.detections.push_back({current, score});
  }

  std::stable_sort(result.detections.begin(), result.detections.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  return result;
}

}  // namespace vps
