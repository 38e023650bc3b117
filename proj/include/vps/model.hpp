#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vps/conic.hpp"
#include "vps/geometry.hpp"
#include "vps/nn.hpp"
#include "vps/sphere.hpp"
#include "vps/tensor.hpp"

namespace vps {

// Candidate classifier: a small strided-conv backbone followed by a head of
// one 1x1 reduction and a chain of conic-conv stages (conv + BN + ReLU +
// maxpool 3/2, widths doubling), then three fully connected blocks ending in
// a sigmoid over the threshold set.
//
// plain_head switches every conic convolution to an ordinary 3x3 one and
// concatenates the candidate direction as three constant channels before the
// reduction; the resulting model keeps identical layer shapes. This is the
// classification-only ablation.
struct ModelConfig {
  int image_size = 128;
  int input_channels = 1;
  int backbone_stem = 32;   // width of the 7x7 stem conv
  int feat_channels = 64;   // backbone output channels
  int reduce_channels = 32; // after the 1x1 reduction
  std::vector<int> stage_channels{32, 64, 128, 256};
  std::vector<int> fc_dims{256, 64};
  int num_thresholds = 4;   // sigmoid outputs, one per threshold
  bool plain_head = false;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json&);
};

// Image point a candidate direction is steered toward: its vanishing point
// when finite, otherwise a stand-in 1e6 px out along the ideal direction
// (the conic frame only consumes the direction field, which this reproduces).
ImagePoint candidate_center(const UnitDirection& d, const CameraIntrinsics& K);

namespace detail {

struct ConvBnRelu {
  Param w, b, scale, shift, rmean, rvar;
  int stride = 1, pad = 0;
  struct Cache {
    Tensor4 x, conv, bn;
    BatchNormCache bnc;
  } cache;

  void build(const std::string& prefix, int cin, int cout, int k, int stride,
             int pad);
  void init_weights(Rng& rng);
  void collect(std::vector<Param*>& out);
  Tensor4 forward(Tensor4 x, bool train, bool keep_input_grad);
  // consumes grad of the block output; returns grad wrt the block input
  // (empty when keep_input_grad was false)
  std::vector<Real> backward(std::vector<Real> grad_out);
};

// conic (or plain) conv + BN + ReLU + maxpool 3/2
struct ConicStage {
  bool plain = false;
  Param w, b, scale, shift, rmean, rvar;
  struct Cache {
    Tensor4 x, conv, bn, relu;
    std::vector<ConicFrame> frames;
    std::vector<int32_t> argmax;
    BatchNormCache bnc;
  } cache;

  void build(const std::string& prefix, int cin, int cout, bool plain);
  void init_weights(Rng& rng);
  void collect(std::vector<Param*>& out);
  Tensor4 forward(Tensor4 x, std::vector<ConicFrame> frames, bool train);
  std::vector<Real> backward(std::vector<Real> grad_out);
};

struct LinearBlock {
  Param w, b, scale, shift, rmean, rvar;
  bool batch_norm = true;
  struct Cache {
    Tensor4 x, lin, bn;
    BatchNormCache bnc;
  } cache;

  void build(const std::string& prefix, int in, int out, bool batch_norm);
  void init_weights(Rng& rng);
  void collect(std::vector<Param*>& out);
  Tensor4 forward(Tensor4 x, bool train);  // relu when batch_norm, raw otherwise
  std::vector<Real> backward(std::vector<Real> grad_out);
};

}  // namespace detail

class VpsModel {
 public:
  explicit VpsModel(const ModelConfig& cfg);

  void init_weights(uint64_t seed);
  std::vector<Param*> params();
  const ModelConfig& config() const { return cfg_; }

  // Feature-map side length after the backbone and after each head stage.
  int feature_size() const { return feat_size_; }

  Tensor4 backbone_forward(const Tensor4& images, bool train);
  void backbone_backward(std::vector<Real> feat_grad);

  struct CandidateRef {
    int image = 0;
    UnitDirection direction;
  };

  // features: one row per image; candidates reference rows by index. Output
  // is (M, num_thresholds, 1, 1) probabilities.
  Tensor4 head_forward(const Tensor4& features,
                       std::span<const CandidateRef> candidates,
                       const CameraIntrinsics& K, bool train);
  // Returns the gradient wrt features (same layout as the features batch),
  // summed over each image's candidates.
  std::vector<Real> head_backward(std::vector<Real> prob_grad);

  // Full training pass: forward both parts, mean BCE over candidates and
  // thresholds, backward into parameter gradient buffers (accumulating).
  // candidates[i] belongs to images row i; every label vector must have
  // num_thresholds entries.
  double train_forward_backward(
      const Tensor4& images,
      const std::vector<std::vector<CandidateLabel>>& candidates,
      const CameraIntrinsics& K);

  void save(const std::string& path, const nlohmann::json& extra_meta) const;
  // Builds the model described by the file's metadata and loads its weights.
  static VpsModel load(const std::string& path, nlohmann::json* meta_out = nullptr);

 private:
  ModelConfig cfg_;
  int feat_size_ = 0;
  std::vector<int> stage_sizes_;   // spatial size entering each stage
  std::vector<int> stage_strides_; // cumulative stride entering each stage
  int flatten_dim_ = 0;

  detail::ConvBnRelu stem_, mid_, res1_, res2_;  // backbone
  detail::ConvBnRelu reduce_;
  std::vector<detail::ConicStage> stages_;
  detail::LinearBlock fc1_, fc2_, fc_out_;
  Tensor4 probs_cache_;
  std::vector<int> owner_;  // candidate row -> image row of the last head pass

  std::vector<ConicFrame> frames_for(const UnitDirection& d,
                                     const CameraIntrinsics& K) const;
};

}  // namespace vps
