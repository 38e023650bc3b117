#pragma once

#include <string>
#include <vector>

#include "vps/geometry.hpp"
#include "vps/tensor.hpp"

namespace vps {

struct DatasetSample {
  std::string id;
  std::string image_path;  // absolute
  std::string label_path;
  uint64_t seed = 0;
};

struct DatasetIndex {
  std::string root;
  int image_size = 0;
  CameraIntrinsics intrinsics;
  std::vector<DatasetSample> samples;
};

struct SampleLabel {
  std::vector<UnitDirection> directions;
  CameraIntrinsics intrinsics;
  uint64_t seed = 0;
};

DatasetIndex load_dataset_index(const std::string& dir);
SampleLabel load_label(const std::string& path);

// 1 x 1 x S x S tensor scaled to [-1, 1].
Tensor4 load_image_normalized(const std::string& path);

// Stable train/val split keyed on the per-sample seed hash, independent of
// sample order.
bool is_val_sample(const DatasetSample& s, double val_fraction);

}  // namespace vps
