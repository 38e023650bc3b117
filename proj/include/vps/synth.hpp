#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vps/geometry.hpp"
#include "vps/tensor.hpp"

namespace vps {

// Procedural line-scene generator with exact vanishing point labels.
// Structural lines run from a random in-image anchor toward a vanishing
// point (or along its ideal direction); clutter lines have free orientation.
struct SceneSpec {
  int image_size = 128;
  double focal = 64;  // pixels; the optical center sits at the grid center
  int num_vps = 1;
  bool orthogonal_vps = false;  // force a mutually orthogonal triad (needs num_vps == 3)
  int lines_per_vp = 8;
  int clutter_lines = 4;
  double line_width = 1.5;
  double intensity_min = 0.3;
  double intensity_max = 1.0;
  double noise_sigma = 0.05;
  uint64_t seed = 1;

  CameraIntrinsics intrinsics() const {
    const double c = (image_size - 1) / 2.0;
    return {focal, c, c};
  }
};

struct RenderedLine {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int vp_index = -1;  // -1 for clutter
};

struct Scene {
  Tensor4 image;  // 1 x 1 x S x S, values in [0, 1]
  std::vector<UnitDirection> directions;
  std::vector<RenderedLine> lines;
};

Scene generate_scene(const SceneSpec& spec);

// Deterministic per-sample seed stream.
uint64_t sample_seed(uint64_t dataset_seed, int index);

// Writes index.json, images/NNNNNN.png and labels/NNNNNN.json under out_dir.
void generate_dataset(const SceneSpec& spec_template, int count,
                      const std::string& out_dir);

}  // namespace vps
