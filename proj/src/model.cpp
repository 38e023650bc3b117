#include "vps/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vps/serialize.hpp"

namespace vps {

namespace {

int conv_out(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Shape-only tensor that carries an upstream gradient into backward kernels.
Tensor4 grad_carrier(int n, int c, int h, int w, std::vector<Real> g) {
  Tensor4 t;
  t.n = n;
  t.c = c;
  t.h = h;
  t.w = w;
  t.grad = std::move(g);
  return t;
}

}  // namespace

nlohmann::json ModelConfig::to_json() const {
  return {{"image_size", image_size},
          {"input_channels", input_channels},
          {"backbone_stem", backbone_stem},
          {"feat_channels", feat_channels},
          {"reduce_channels", reduce_channels},
          {"stage_channels", stage_channels},
          {"fc_dims", fc_dims},
          {"num_thresholds", num_thresholds},
          {"plain_head", plain_head}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.image_size = j.at("image_size").get<int>();
  c.input_channels = j.at("input_channels").get<int>();
  c.backbone_stem = j.at("backbone_stem").get<int>();
  c.feat_channels = j.at("feat_channels").get<int>();
  c.reduce_channels = j.at("reduce_channels").get<int>();
  c.stage_channels = j.at("stage_channels").get<std::vector<int>>();
  c.fc_dims = j.at("fc_dims").get<std::vector<int>>();
  c.num_thresholds = j.at("num_thresholds").get<int>();
  c.plain_head = j.at("plain_head").get<bool>();
  return c;
}

ImagePoint candidate_center(const UnitDirection& d, const CameraIntrinsics& K) {
  if (const auto v = direction_to_vp(d, K)) return *v;
  const double n = std::hypot(d.x, d.y);
  return {K.cx + 1e6 * d.x / n, K.cy + 1e6 * d.y / n};
}

namespace detail {

// ---- ConvBnRelu ----

void ConvBnRelu::build(const std::string& prefix, int cin, int cout, int k,
                       int stride_, int pad_) {
  stride = stride_;
  pad = pad_;
  w = Param::make(prefix + ".w", {cout, cin, k, k});
  b = Param::make(prefix + ".b", {cout});
  scale = Param::make(prefix + ".bn_scale", {cout});
  shift = Param::make(prefix + ".bn_shift", {cout});
  rmean = Param::make(prefix + ".bn_mean", {cout}, false);
  rvar = Param::make(prefix + ".bn_var", {cout}, false);
}

void ConvBnRelu::init_weights(Rng& rng) {
  init_kaiming(w, w.shape[1] * w.shape[2] * w.shape[3], rng);
  std::fill(b.w.begin(), b.w.end(), Real(0));
  std::fill(scale.w.begin(), scale.w.end(), Real(1));
  std::fill(shift.w.begin(), shift.w.end(), Real(0));
  std::fill(rmean.w.begin(), rmean.w.end(), Real(0));
  std::fill(rvar.w.begin(), rvar.w.end(), Real(1));
}

void ConvBnRelu::collect(std::vector<Param*>& out) {
  for (Param* p : {&w, &b, &scale, &shift, &rmean, &rvar}) out.push_back(p);
}

Tensor4 ConvBnRelu::forward(Tensor4 x, bool train, bool keep_input_grad) {
  cache.x = std::move(x);
  if (keep_input_grad) {
    cache.x.ensure_grad();
  } else {
    cache.x.grad.clear();
  }
  cache.conv = conv2d_forward(cache.x, w, b, stride, pad);
  cache.bn = batchnorm_forward(cache.conv, scale, shift, rmean, rvar, train,
                               Real(0.9), Real(1e-5), &cache.bnc);
  return relu_forward(cache.bn);
}

std::vector<Real> ConvBnRelu::backward(std::vector<Real> grad_out) {
  const Tensor4 relu_g = grad_carrier(cache.bn.n, cache.bn.c, cache.bn.h,
                                      cache.bn.w, std::move(grad_out));
  cache.bn.zero_grad();
  relu_backward(cache.bn, relu_g);
  cache.conv.zero_grad();
  batchnorm_backward(cache.conv, cache.bn, scale, shift, cache.bnc);
  if (cache.x.has_grad()) cache.x.zero_grad();
  conv2d_backward(cache.x, cache.conv, w, b, stride, pad);
  return std::move(cache.x.grad);
}

// ---- ConicStage ----

void ConicStage::build(const std::string& prefix, int cin, int cout, bool plain_) {
  plain = plain_;
  w = Param::make(prefix + ".w", {cout, cin, 3, 3});
  b = Param::make(prefix + ".b", {cout});
  scale = Param::make(prefix + ".bn_scale", {cout});
  shift = Param::make(prefix + ".bn_shift", {cout});
  rmean = Param::make(prefix + ".bn_mean", {cout}, false);
  rvar = Param::make(prefix + ".bn_var", {cout}, false);
}

void ConicStage::init_weights(Rng& rng) {
  init_kaiming(w, w.shape[1] * 9, rng);
  std::fill(b.w.begin(), b.w.end(), Real(0));
  std::fill(scale.w.begin(), scale.w.end(), Real(1));
  std::fill(shift.w.begin(), shift.w.end(), Real(0));
  std::fill(rmean.w.begin(), rmean.w.end(), Real(0));
  std::fill(rvar.w.begin(), rvar.w.end(), Real(1));
}

void ConicStage::collect(std::vector<Param*>& out) {
  for (Param* p : {&w, &b, &scale, &shift, &rmean, &rvar}) out.push_back(p);
}

Tensor4 ConicStage::forward(Tensor4 x, std::vector<ConicFrame> frames, bool train) {
  cache.x = std::move(x);
  cache.x.ensure_grad();
  cache.frames = std::move(frames);
  cache.conv = plain ? conv2d_forward(cache.x, w, b, 1, 1)
                     : conic_conv_fast(cache.x, cache.frames, w, b);
  cache.bn = batchnorm_forward(cache.conv, scale, shift, rmean, rvar, train,
                               Real(0.9), Real(1e-5), &cache.bnc);
  cache.relu = relu_forward(cache.bn);
  return maxpool2d_forward(cache.relu, 3, 2, &cache.argmax);
}

std::vector<Real> ConicStage::backward(std::vector<Real> grad_out) {
  const int ph = pool_out_size(cache.relu.h, 3, 2);
  const int pw = pool_out_size(cache.relu.w, 3, 2);
  const Tensor4 pool_g =
      grad_carrier(cache.relu.n, cache.relu.c, ph, pw, std::move(grad_out));
  cache.relu.zero_grad();
  maxpool2d_backward(cache.relu, pool_g, cache.argmax);

  cache.bn.zero_grad();
  relu_backward(cache.bn, cache.relu);
  cache.conv.zero_grad();
  batchnorm_backward(cache.conv, cache.bn, scale, shift, cache.bnc);
  cache.x.zero_grad();
  if (plain) {
    conv2d_backward(cache.x, cache.conv, w, b, 1, 1);
  } else {
    conic_conv_backward(cache.x, cache.conv, cache.frames, w, b);
  }
  return std::move(cache.x.grad);
}

// ---- LinearBlock ----

void LinearBlock::build(const std::string& prefix, int in, int out, bool bn) {
  batch_norm = bn;
  w = Param::make(prefix + ".w", {out, in});
  b = Param::make(prefix + ".b", {out});
  if (batch_norm) {
    scale = Param::make(prefix + ".bn_scale", {out});
    shift = Param::make(prefix + ".bn_shift", {out});
    rmean = Param::make(prefix + ".bn_mean", {out}, false);
    rvar = Param::make(prefix + ".bn_var", {out}, false);
  }
}

void LinearBlock::init_weights(Rng& rng) {
  init_kaiming(w, w.shape[1], rng);
  std::fill(b.w.begin(), b.w.end(), Real(0));
  if (batch_norm) {
    std::fill(scale.w.begin(), scale.w.end(), Real(1));
    std::fill(shift.w.begin(), shift.w.end(), Real(0));
    std::fill(rmean.w.begin(), rmean.w.end(), Real(0));
    std::fill(rvar.w.begin(), rvar.w.end(), Real(1));
  }
}

void LinearBlock::collect(std::vector<Param*>& out) {
  out.push_back(&w);
  out.push_back(&b);
  if (batch_norm) {
    for (Param* p : {&scale, &shift, &rmean, &rvar}) out.push_back(p);
  }
}

Tensor4 LinearBlock::forward(Tensor4 x, bool train) {
  cache.x = std::move(x);
  cache.x.ensure_grad();
  cache.lin = linear_forward(cache.x, w, b);
  if (!batch_norm) return cache.lin;
  cache.bn = batchnorm_forward(cache.lin, scale, shift, rmean, rvar, train,
                               Real(0.9), Real(1e-5), &cache.bnc);
  return relu_forward(cache.bn);
}

std::vector<Real> LinearBlock::backward(std::vector<Real> grad_out) {
  if (batch_norm) {
    const Tensor4 relu_g = grad_carrier(cache.bn.n, cache.bn.c, 1, 1, std::move(grad_out));
    cache.bn.zero_grad();
    relu_backward(cache.bn, relu_g);
    cache.lin.zero_grad();
    batchnorm_backward(cache.lin, cache.bn, scale, shift, cache.bnc);
  } else {
    cache.lin.grad = std::move(grad_out);
  }
  cache.x.zero_grad();
  linear_backward(cache.x, cache.lin, w, b);
  return std::move(cache.x.grad);
}

}  // namespace detail

// ---- VpsModel ----

VpsModel::VpsModel(const ModelConfig& cfg) : cfg_(cfg) {
  if (cfg_.image_size < 16) throw std::invalid_argument("VpsModel: image_size too small");
  if (cfg_.stage_channels.empty()) throw std::invalid_argument("VpsModel: no head stages");
  if (cfg_.fc_dims.size() != 2) throw std::invalid_argument("VpsModel: fc_dims must have 2 entries");
  if (cfg_.num_thresholds < 1) throw std::invalid_argument("VpsModel: need thresholds");

  stem_.build("backbone.stem", cfg_.input_channels, cfg_.backbone_stem, 7, 2, 3);
  mid_.build("backbone.mid", cfg_.backbone_stem, cfg_.feat_channels, 3, 2, 1);
  res1_.build("backbone.conv3", cfg_.feat_channels, cfg_.feat_channels, 3, 1, 1);
  res2_.build("backbone.conv4", cfg_.feat_channels, cfg_.feat_channels, 3, 1, 1);

  feat_size_ = conv_out(conv_out(cfg_.image_size, 7, 2, 3), 3, 2, 1);

  const int head_in = cfg_.feat_channels + (cfg_.plain_head ? 3 : 0);
  reduce_.build("head.reduce", head_in, cfg_.reduce_channels, 1, 1, 0);

  int size = feat_size_;
  int stride = 4;
  int cin = cfg_.reduce_channels;
  stages_.resize(cfg_.stage_channels.size());
  for (size_t i = 0; i < stages_.size(); ++i) {
    stage_sizes_.push_back(size);
    stage_strides_.push_back(stride);
    stages_[i].build("head.stage" + std::to_string(i + 1), cin,
                     cfg_.stage_channels[i], cfg_.plain_head);
    cin = cfg_.stage_channels[i];
    size = pool_out_size(size, 3, 2);
    stride *= 2;
  }
  flatten_dim_ = cfg_.stage_channels.back() * size * size;

  fc1_.build("head.fc1", flatten_dim_, cfg_.fc_dims[0], true);
  fc2_.build("head.fc2", cfg_.fc_dims[0], cfg_.fc_dims[1], true);
  fc_out_.build("head.fc_out", cfg_.fc_dims[1], cfg_.num_thresholds, false);
}

void VpsModel::init_weights(uint64_t seed) {
  Rng rng(seed);
  stem_.init_weights(rng);
  mid_.init_weights(rng);
  res1_.init_weights(rng);
  res2_.init_weights(rng);
  reduce_.init_weights(rng);
  for (auto& s : stages_) s.init_weights(rng);
  fc1_.init_weights(rng);
  fc2_.init_weights(rng);
  fc_out_.init_weights(rng);
}

std::vector<Param*> VpsModel::params() {
  std::vector<Param*> out;
  stem_.collect(out);
  mid_.collect(out);
  res1_.collect(out);
  res2_.collect(out);
  reduce_.collect(out);
  for (auto& s : stages_) s.collect(out);
  fc1_.collect(out);
  fc2_.collect(out);
  fc_out_.collect(out);
  return out;
}

Tensor4 VpsModel::backbone_forward(const Tensor4& images, bool train) {
  if (images.h != cfg_.image_size || images.w != cfg_.image_size) {
    throw std::invalid_argument("backbone_forward: image size mismatch");
  }
  if (images.c != cfg_.input_channels) {
    throw std::invalid_argument("backbone_forward: channel mismatch");
  }
  Tensor4 t = stem_.forward(images, train, false);
  t = mid_.forward(std::move(t), train, true);
  t = res1_.forward(std::move(t), train, true);
  t = res2_.forward(std::move(t), train, true);
  return t;
}

void VpsModel::backbone_backward(std::vector<Real> feat_grad) {
  feat_grad = res2_.backward(std::move(feat_grad));
  feat_grad = res1_.backward(std::move(feat_grad));
  feat_grad = mid_.backward(std::move(feat_grad));
  stem_.backward(std::move(feat_grad));
}

std::vector<ConicFrame> VpsModel::frames_for(const UnitDirection& d,
                                             const CameraIntrinsics& K) const {
  std::vector<ConicFrame> out;
  if (cfg_.plain_head) return out;
  const ImagePoint v = candidate_center(d, K);
  out.reserve(stages_.size());
  for (size_t i = 0; i < stages_.size(); ++i) {
    const double s = stage_strides_[i];
    out.push_back(build_conic_frame(stage_sizes_[i], stage_sizes_[i],
                                    {v.u / s, v.v / s}));
  }
  return out;
}

Tensor4 VpsModel::head_forward(const Tensor4& features,
                               std::span<const CandidateRef> candidates,
                               const CameraIntrinsics& K, bool train) {
  if (features.c != cfg_.feat_channels || features.h != feat_size_ ||
      features.w != feat_size_) {
    throw std::invalid_argument("head_forward: bad feature shape");
  }
  if (candidates.empty()) throw std::invalid_argument("head_forward: no candidates");
  const int M = static_cast<int>(candidates.size());
  const int head_in = cfg_.feat_channels + (cfg_.plain_head ? 3 : 0);
  const size_t hw = static_cast<size_t>(feat_size_) * feat_size_;

  owner_.assign(M, 0);
  Tensor4 x(M, head_in, feat_size_, feat_size_);
  for (int m = 0; m < M; ++m) {
    const auto& cand = candidates[m];
    if (cand.image < 0 || cand.image >= features.n) {
      throw std::invalid_argument("head_forward: candidate references missing image");
    }
    owner_[m] = cand.image;
    std::copy_n(features.val.data() + features.idx(cand.image, 0, 0, 0),
                hw * cfg_.feat_channels, x.val.data() + x.idx(m, 0, 0, 0));
    if (cfg_.plain_head) {
      const double comps[3] = {cand.direction.x, cand.direction.y, cand.direction.z};
      for (int k = 0; k < 3; ++k) {
        std::fill_n(x.val.data() + x.idx(m, cfg_.feat_channels + k, 0, 0), hw,
                    static_cast<Real>(comps[k]));
      }
    }
  }

  // one frame set per stage, indexed per candidate
  std::vector<std::vector<ConicFrame>> stage_frames(stages_.size());
  if (!cfg_.plain_head) {
    for (size_t i = 0; i < stages_.size(); ++i) stage_frames[i].reserve(M);
    for (int m = 0; m < M; ++m) {
      auto frames = frames_for(candidates[m].direction, K);
      for (size_t i = 0; i < stages_.size(); ++i) {
        stage_frames[i].push_back(std::move(frames[i]));
      }
    }
  }

  Tensor4 t = reduce_.forward(std::move(x), train, true);
  for (size_t i = 0; i < stages_.size(); ++i) {
    t = stages_[i].forward(std::move(t), std::move(stage_frames[i]), train);
  }
  t = fc1_.forward(std::move(t), train);
  t = fc2_.forward(std::move(t), train);
  Tensor4 logits = fc_out_.forward(std::move(t), train);
  probs_cache_ = sigmoid_forward(logits);
  return probs_cache_;
}

std::vector<Real> VpsModel::head_backward(std::vector<Real> prob_grad) {
  if (prob_grad.size() != probs_cache_.size()) {
    throw std::invalid_argument("head_backward: gradient size mismatch");
  }
  // sigmoid gradient, done inline against the cached probabilities
  std::vector<Real> g(prob_grad.size());
  for (size_t i = 0; i < g.size(); ++i) {
    const Real p = probs_cache_.val[i];
    g[i] = prob_grad[i] * p * (Real(1) - p);
  }
  g = fc_out_.backward(std::move(g));
  g = fc2_.backward(std::move(g));
  g = fc1_.backward(std::move(g));
  for (size_t i = stages_.size(); i-- > 0;) {
    g = stages_[i].backward(std::move(g));
  }
  g = reduce_.backward(std::move(g));

  // fold candidate-row gradients back onto their source image rows,
  // dropping the direction planes of the plain head
  const size_t hw = static_cast<size_t>(feat_size_) * feat_size_;
  const int head_in = cfg_.feat_channels + (cfg_.plain_head ? 3 : 0);
  int max_image = 0;
  for (int o : owner_) max_image = std::max(max_image, o);
  std::vector<Real> fg(static_cast<size_t>(max_image + 1) * cfg_.feat_channels * hw,
                       Real(0));
  const size_t row_in = static_cast<size_t>(head_in) * hw;
  const size_t row_out = static_cast<size_t>(cfg_.feat_channels) * hw;
  for (size_t m = 0; m < owner_.size(); ++m) {
    const Real* src = g.data() + m * row_in;
    Real* dst = fg.data() + static_cast<size_t>(owner_[m]) * row_out;
    for (size_t i = 0; i < row_out; ++i) dst[i] += src[i];
  }
  return fg;
}

double VpsModel::train_forward_backward(
    const Tensor4& images,
    const std::vector<std::vector<CandidateLabel>>& candidates,
    const CameraIntrinsics& K) {
  if (images.n == 0 || static_cast<size_t>(images.n) != candidates.size()) {
    throw std::invalid_argument("train_forward_backward: empty or mismatched batch");
  }

  std::vector<CandidateRef> refs;
  std::vector<Real> targets;
  for (int i = 0; i < images.n; ++i) {
    for (const CandidateLabel& c : candidates[i]) {
      if (c.labels.size() != static_cast<size_t>(cfg_.num_thresholds)) {
        throw std::invalid_argument("train_forward_backward: label width mismatch");
      }
      refs.push_back({i, c.direction});
      for (uint8_t l : c.labels) targets.push_back(static_cast<Real>(l));
    }
  }
  if (refs.empty()) throw std::invalid_argument("train_forward_backward: no candidates");

  Tensor4 features = backbone_forward(images, true);
  Tensor4 probs = head_forward(features, refs, K, true);
  const double loss = bce_loss(probs, targets);
  std::vector<Real> fg = head_backward(std::move(probs.grad));
  backbone_backward(std::move(fg));
  return loss;
}

void VpsModel::save(const std::string& path, const nlohmann::json& extra_meta) const {
  nlohmann::json meta = extra_meta;
  meta["model"] = cfg_.to_json();
  auto ps = const_cast<VpsModel*>(this)->params();
  std::vector<const Param*> cps(ps.begin(), ps.end());
  save_params(path, cps, meta);
}

VpsModel VpsModel::load(const std::string& path, nlohmann::json* meta_out) {
  const auto meta = load_meta(path);
  VpsModel model(ModelConfig::from_json(meta.at("model")));
  auto ps = model.params();
  load_params(path, ps);
  if (meta_out) *meta_out = meta;
  return model;
}

}  // namespace vps
