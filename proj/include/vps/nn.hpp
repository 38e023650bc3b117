#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vps/rng.hpp"
#include "vps/tensor.hpp"

namespace vps {

// Dense NN kernels. Every backward accumulates (+=) into gradient buffers;
// call zero_grad explicitly between steps. Pooling uses ceil-mode windows
// clipped at the border, so maps smaller than the kernel still produce one
// output. Convolutions use floor-mode output sizes and zero padding.

// ---- conv2d (cross-correlation) ----
// weight shape (C_out, C_in, kh, kw), bias shape (C_out).
Tensor4 conv2d_forward(const Tensor4& x, const Param& weight, const Param& bias,
                       int stride, int padding);
// Reads y.grad; accumulates x.grad (when x has a grad buffer), weight.g, bias.g.
void conv2d_backward(Tensor4& x, const Tensor4& y, Param& weight, Param& bias,
                     int stride, int padding);

// ---- max pooling ----
int pool_out_size(int in, int kernel, int stride);
Tensor4 maxpool2d_forward(const Tensor4& x, int kernel, int stride,
                          std::vector<int32_t>* argmax);
void maxpool2d_backward(Tensor4& x, const Tensor4& y,
                        std::span<const int32_t> argmax);

// ---- batch norm ----
struct BatchNormCache {
  Tensor4 xhat;
  std::vector<Real> inv_std;
  bool training = false;
};
// Normalizes per channel over (N, H, W). Training mode uses batch statistics
// and updates the running buffers in place; eval mode reads the running
// buffers. `cache` is required for backward.
Tensor4 batchnorm_forward(const Tensor4& x, const Param& scale,
                          const Param& shift, Param& running_mean,
                          Param& running_var, bool training, Real momentum,
                          Real eps, BatchNormCache* cache);
void batchnorm_backward(Tensor4& x, const Tensor4& y, Param& scale,
                        Param& shift, const BatchNormCache& cache);

// ---- relu ----
Tensor4 relu_forward(const Tensor4& x);
void relu_backward(Tensor4& x, const Tensor4& y);

// ---- fully connected ----
// x is flattened to (N, C*H*W); weight shape (out, in), bias (out).
Tensor4 linear_forward(const Tensor4& x, const Param& weight, const Param& bias);
void linear_backward(Tensor4& x, const Tensor4& y, Param& weight, Param& bias);

// ---- sigmoid + binary cross entropy ----
Tensor4 sigmoid_forward(const Tensor4& x);
void sigmoid_backward(Tensor4& x, const Tensor4& y);
// Mean BCE over all elements; probabilities are clamped to
// [kBceEps, 1 - kBceEps]. Accumulates dL/dp into p.grad.
inline constexpr Real kBceEps = Real(1e-7);
double bce_loss(Tensor4& p, std::span<const Real> targets);

// ---- optimizer ----
struct AdamConfig {
  Real lr = Real(4e-4);
  Real weight_decay = Real(1e-5);
  Real beta1 = Real(0.9);
  Real beta2 = Real(0.999);
  Real eps = Real(1e-8);
};
// One update over all trainable params; step is the 1-based step count used
// for bias correction. L2 is folded into the gradient before the moments.
void adam_step(std::span<Param*> params, const AdamConfig& cfg, int64_t step);

void zero_grads(std::span<Param*> params);

// Kaiming fan-in init for conv / fc weights.
void init_kaiming(Param& weight, int fan_in, Rng& rng);

}  // namespace vps
