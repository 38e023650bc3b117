#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vps/config.hpp"
#include "vps/dataset.hpp"
#include "vps/eval.hpp"
#include "vps/infer.hpp"
#include "vps/model.hpp"

namespace vps {

// Library-level bodies of the CLI subcommands, shared with the acceptance
// suite so both drive the exact same code paths.

struct TrainStats {
  int epochs = 0;
  int64_t steps = 0;
  double final_epoch_loss = 0;
  double seconds = 0;
};

// Trains a fresh model on the dataset's training split and writes the
// weight file plus a .json sidecar with the threshold schedule. `progress`
// (nullable) receives one line per epoch; `log_csv` (optional) gets
// epoch,loss,seconds rows.
TrainStats train_model(const RunConfig& cfg, const std::string& dataset_dir,
                       const std::string& out_model, std::ostream* progress,
                       const std::string& log_csv = "");

struct ImagePrediction {
  std::string image_id;
  std::vector<UnitDirection> directions;
  std::vector<double> scores;
  std::vector<std::optional<ImagePoint>> image_points;
  int64_t head_evaluations = 0;
  bool underfilled = false;
};

// Checks that the model's threshold count matches the search config.
void check_model_matches(const VpsModel& model, const RunConfig& cfg);

ImagePrediction detect_single(VpsModel& model, const SearchConfig& scfg,
                              const ThresholdSchedule& schedule,
                              const CameraIntrinsics& K, const Tensor4& image,
                              const std::string& image_id);

// split: "train", "val" or "all".
std::vector<ImagePrediction> detect_on_dataset(const RunConfig& cfg,
                                               VpsModel& model,
                                               const std::string& dataset_dir,
                                               const std::string& split,
                                               std::ostream* progress);

nlohmann::json predictions_to_json(std::span<const ImagePrediction> preds);
std::vector<ImagePrediction> predictions_from_json(const nlohmann::json& j);

struct EvalOutput {
  AACurve curve;
  EvalSummary summary;
};

EvalOutput evaluate_predictions(const RunConfig& cfg,
                                std::span<const ImagePrediction> preds,
                                const std::string& dataset_dir);

nlohmann::json summary_to_json(const EvalSummary& summary);

}  // namespace vps
