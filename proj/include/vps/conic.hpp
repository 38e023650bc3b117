#pragma once

#include <span>
#include <vector>

#include "vps/geometry.hpp"
#include "vps/tensor.hpp"

namespace vps {

// Per-pixel local frame whose x-axis points from the pixel toward the
// convolution center v. The y-axis is the 90-degree counterclockwise
// rotation (-ty, tx) in (u, v) coordinates; it is derived on the fly rather
// than stored. Frames are immutable after construction and shareable
// between workers.
struct ConicFrame {
  int h = 0, w = 0;
  double vx = 0.0, vy = 0.0;  // center in feature-map coordinates
  std::vector<double> tx, ty;

  size_t idx(int y, int x) const { return static_cast<size_t>(y) * w + x; }
};

// Distance below which a pixel is considered coincident with v; such pixels
// fall back to the axis-aligned frame t = (1, 0).
inline constexpr double kConicSingularEps = 1e-6;

ConicFrame build_conic_frame(int h, int w, const ImagePoint& v);

// 3x3 convolution of x sampled in each pixel's conic frame, bilinear
// interpolation, zero outside the map, output at input resolution.
// frames.size() must be 1 (shared) or x.n (one per batch entry).
//
// conic_conv_reference is the naive per-pixel transcription kept as the
// correctness oracle; conic_conv_fast gathers bilinear samples into patch
// tiles and multiplies them with the flattened weight matrix.
Tensor4 conic_conv_reference(const Tensor4& x, std::span<const ConicFrame> frames,
                             const Param& weight, const Param& bias);
Tensor4 conic_conv_fast(const Tensor4& x, std::span<const ConicFrame> frames,
                        const Param& weight, const Param& bias);

// Accumulates x.grad (bilinear scatter), weight.g and bias.g from y.grad.
// No gradient flows to the frame; candidate coordinates are inputs.
void conic_conv_backward(Tensor4& x, const Tensor4& y,
                         std::span<const ConicFrame> frames, Param& weight,
                         Param& bias);

}  // namespace vps
