#pragma once

#include <memory>
#include <span>
#include <vector>

#include "vps/geometry.hpp"
#include "vps/model.hpp"
#include "vps/sphere.hpp"

namespace vps {

struct SearchConfig {
  int rounds = 4;             // R; also the number of classifier thresholds
  int samples_per_round = 64; // lattice size per round
  double rho = 1.2;           // cap growth factor over the covering angle
  int top_k = 1;              // vanishing points to return
  int covering_grid = 256;    // density multiplier for covering_angle
  double min_separation = 0;  // seed separation; 0 = twice the round-2 cap

  bool valid() const {
    return rounds >= 1 && samples_per_round >= 2 && rho >= 1.0 && top_k >= 1 &&
           covering_grid >= 1 && min_separation >= 0;
  }
};

// cap_angles holds the per-round cap polar angles (rounds+1 entries,
// starting at pi/2); thresholds is the classifier threshold set, which is
// the cap-angle sequence shifted by one round.
struct ThresholdSchedule {
  std::vector<double> cap_angles;
  std::vector<double> thresholds;
};

// Deterministic shrink schedule: each round's threshold is rho times the
// covering angle of that round's lattice, measured inside the round's cap.
// Throws if the schedule fails to decrease (samples_per_round too small for
// rho).
ThresholdSchedule derive_threshold_schedule(const SearchConfig& cfg);

// Scores a batch of candidate directions at one threshold index. Round r of
// the search consumes index r-1.
class CandidateScorer {
 public:
  virtual ~CandidateScorer() = default;
  virtual std::vector<double> score(std::span<const UnitDirection> candidates,
                                    int threshold_index) = 0;
};

// Classifier-backed scorer: runs the backbone once at construction and the
// head per candidate batch, in eval mode.
class ModelScorer : public CandidateScorer {
 public:
  ModelScorer(VpsModel& model, const Tensor4& image, const CameraIntrinsics& K);
  std::vector<double> score(std::span<const UnitDirection> candidates,
                            int threshold_index) override;
  int64_t head_evaluations() const { return head_evaluations_; }

 private:
  VpsModel& model_;
  CameraIntrinsics K_;
  Tensor4 features_;
  int64_t head_evaluations_ = 0;
};

struct Detection {
  UnitDirection direction;
  double score = 0;
};

struct DetectResult {
  std::vector<Detection> detections;  // best score first
  bool underfilled = false;           // fewer than top_k separated seeds
  int64_t scored_candidates = 0;      // scorer invocations, summed over rounds
};

// Greedy top-k by score subject to pairwise separation; returns fewer than k
// (flagged) when the field cannot support k separated seeds.
struct TopkSelection {
  std::vector<int> indices;
  bool underfilled = false;
};
TopkSelection select_topk_separated(std::span<const double> scores,
                                    std::span<const UnitDirection> directions,
                                    int k, double min_separation);

// Coarse-to-fine search over the Gaussian hemisphere. Round 1 scans the full
// hemisphere lattice and seeds top_k directions; later rounds shrink the cap
// around each seed's best candidate.
DetectResult detect(CandidateScorer& scorer, const SearchConfig& cfg,
                    const ThresholdSchedule& schedule);

}  // namespace vps
