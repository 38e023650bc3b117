#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "vps/infer.hpp"
#include "vps/model.hpp"
#include "vps/synth.hpp"

namespace vps {

// Flat key = value experiment configuration. Every tunable of the pipeline
// lives here with a documented default; unknown keys are rejected so config
// files stay diffable records of real runs.
struct RunConfig {
  // general
  int image_size = 128;
  double focal = 0;  // pixels; 0 = half the image width
  uint64_t seed = 1;
  int workers = 0;  // 0 = all cores

  // scene synthesis
  int vp_count = 1;
  bool orthogonal_vps = false;
  int lines_per_vp = 8;
  int clutter_lines = 4;
  double line_width = 1.5;
  double intensity_min = 0.3;
  double intensity_max = 1.0;
  double noise_sigma = 0.05;

  // model
  int backbone_stem = 32;
  int feat_channels = 64;
  int reduce_channels = 32;
  std::vector<int> stage_channels{32, 64, 128, 256};
  std::vector<int> fc_dims{256, 64};
  std::string head_mode = "conic";  // conic | plain

  // coarse-to-fine search
  int rounds = 4;
  int samples_per_round = 64;
  double rho = 1.2;
  int top_k = 1;
  int covering_grid = 256;
  double min_separation = 0;  // radians; 0 = auto

  // training
  int n_pos = 1;
  int n_neg = 1;
  int n_rand = 3;
  double lr = 4e-4;
  double weight_decay = 1e-5;
  int epochs = 30;
  int batch_size = 8;
  int lr_decay_epoch = 24;  // 1-based epoch where lr drops 10x; 0 = never
  double val_fraction = 0.1;

  // evaluation
  std::vector<double> aa_thresholds_deg{0.5, 1.0, 2.0, 10.0};

  double effective_focal() const { return focal > 0 ? focal : image_size / 2.0; }
  CameraIntrinsics intrinsics() const {
    const double c = (image_size - 1) / 2.0;
    return {effective_focal(), c, c};
  }
  SceneSpec scene_spec() const;
  ModelConfig model_config() const;
  SearchConfig search_config() const;

  // Parses a key = value file ('#' comments); throws on unknown keys or
  // malformed values.
  void load_file(const std::string& path);
  // Applies "key=value" override strings (the --set flag).
  void apply_override(const std::string& kv);
  void validate() const;

  static void write_defaults(std::ostream& out);
};

}  // namespace vps
