#include "vps/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "vps/gemm.hpp"
#include "vps/parallel.hpp"

namespace vps {

namespace {

constexpr int kPixelTile = 256;

int conv_out_size(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

void check_conv_args(const Tensor4& x, const Param& weight, const Param& bias) {
  if (weight.shape.size() != 4) throw std::invalid_argument("conv2d: weight must be 4-d");
  if (bias.shape.size() != 1 || bias.shape[0] != weight.shape[0]) {
    throw std::invalid_argument("conv2d: bias/weight mismatch");
  }
  if (x.c != weight.shape[1]) throw std::invalid_argument("conv2d: channel mismatch");
  if (x.c == 0) throw std::invalid_argument("conv2d: zero input channels");
}

// Gathers the im2col block for output pixels [pix0, pix0+count) of image n.
// Rows are ordered (c, ky, kx) to match the flattened weight layout.
void im2col_tile(const Tensor4& x, int n, int kh, int kw, int stride, int pad,
                 int wout, int pix0, int count, Real* col) {
  const int K = x.c * kh * kw;
  for (int row = 0; row < K; ++row) {
    const int kx = row % kw;
    const int ky = (row / kw) % kh;
    const int c = row / (kh * kw);
    const Real* plane = x.plane(n, c);
    Real* dst = col + static_cast<size_t>(row) * count;
    for (int t = 0; t < count; ++t) {
      const int pix = pix0 + t;
      const int oy = pix / wout, ox = pix % wout;
      const int iy = oy * stride - pad + ky;
      const int ix = ox * stride - pad + kx;
      dst[t] = (iy >= 0 && iy < x.h && ix >= 0 && ix < x.w)
                   ? plane[static_cast<size_t>(iy) * x.w + ix]
                   : Real(0);
    }
  }
}

}  // namespace

Tensor4 conv2d_forward(const Tensor4& x, const Param& weight, const Param& bias,
                       int stride, int padding) {
  check_conv_args(x, weight, bias);
  const int cout = weight.shape[0], kh = weight.shape[2], kw = weight.shape[3];
  const int hout = conv_out_size(x.h, kh, stride, padding);
  const int wout = conv_out_size(x.w, kw, stride, padding);
  if (hout <= 0 || wout <= 0) throw std::invalid_argument("conv2d: output would be empty");

  Tensor4 y(x.n, cout, hout, wout);
  const int K = x.c * kh * kw;
  const int hw = hout * wout;
  const int tiles = (hw + kPixelTile - 1) / kPixelTile;
  const int total = x.n * tiles;

#pragma omp parallel num_threads(num_workers())
  {
    std::vector<Real> col(static_cast<size_t>(K) * kPixelTile);
#pragma omp for schedule(static)
    for (int job = 0; job < total; ++job) {
      const int n = job / tiles;
      const int pix0 = (job % tiles) * kPixelTile;
      const int count = std::min(kPixelTile, hw - pix0);
      im2col_tile(x, n, kh, kw, stride, padding, wout, pix0, count, col.data());
      gemm_nn(cout, count, K, weight.w.data(), K, col.data(), count,
              y.val.data() + y.idx(n, 0, 0, 0) + pix0, hw, false);
      for (int c = 0; c < cout; ++c) {
        Real* row = y.val.data() + y.idx(n, c, 0, 0) + pix0;
        const Real b = bias.w[c];
        for (int t = 0; t < count; ++t) row[t] += b;
      }
    }
  }
  return y;
}

void conv2d_backward(Tensor4& x, const Tensor4& y, Param& weight, Param& bias,
                     int stride, int padding) {
  check_conv_args(x, weight, bias);
  if (y.grad.empty()) throw std::invalid_argument("conv2d_backward: y has no gradient");
  const int cout = weight.shape[0], kh = weight.shape[2], kw = weight.shape[3];
  const int hw = y.h * y.w;
  const int K = x.c * kh * kw;

  for (int c = 0; c < cout; ++c) {
    double s = 0;
    for (int n = 0; n < y.n; ++n) {
      const Real* g = y.grad.data() + y.idx(n, c, 0, 0);
      for (int i = 0; i < hw; ++i) s += g[i];
    }
    bias.g[c] += static_cast<Real>(s);
  }

  std::vector<Real> col(static_cast<size_t>(K) * hw);
  std::vector<Real> gcol(x.has_grad() ? col.size() : 0);
  for (int n = 0; n < x.n; ++n) {
    im2col_tile(x, n, kh, kw, stride, padding, y.w, 0, hw, col.data());
    const Real* gy = y.grad.data() + y.idx(n, 0, 0, 0);
    gemm_nt(cout, K, hw, gy, hw, col.data(), hw, weight.g.data(), K, true);
    if (!x.has_grad()) continue;

    gemm_tn(K, hw, cout, weight.w.data(), K, gy, hw, gcol.data(), hw, false);
    // col2im: scatter-add each gathered sample back to its source pixel.
    for (int row = 0; row < K; ++row) {
      const int kx = row % kw;
      const int ky = (row / kw) % kh;
      const int c = row / (kh * kw);
      Real* gplane = x.grad.data() + x.idx(n, c, 0, 0);
      const Real* src = gcol.data() + static_cast<size_t>(row) * hw;
      for (int pix = 0; pix < hw; ++pix) {
        const int iy = (pix / y.w) * stride - padding + ky;
        const int ix = (pix % y.w) * stride - padding + kx;
        if (iy >= 0 && iy < x.h && ix >= 0 && ix < x.w) {
          gplane[static_cast<size_t>(iy) * x.w + ix] += src[pix];
        }
      }
    }
  }
}

int pool_out_size(int in, int kernel, int stride) {
  if (in < 1) throw std::invalid_argument("pool_out_size: empty input");
  if (in <= kernel) return 1;
  return (in - kernel + stride - 1) / stride + 1;  // ceil mode
}

Tensor4 maxpool2d_forward(const Tensor4& x, int kernel, int stride,
                          std::vector<int32_t>* argmax) {
  const int hout = pool_out_size(x.h, kernel, stride);
  const int wout = pool_out_size(x.w, kernel, stride);
  Tensor4 y(x.n, x.c, hout, wout);
  if (argmax) argmax->assign(y.size(), -1);

  const int planes = x.n * x.c;
#pragma omp parallel for schedule(static) num_threads(num_workers())
  for (int p = 0; p < planes; ++p) {
    const Real* in = x.val.data() + static_cast<size_t>(p) * x.h * x.w;
    Real* out = y.val.data() + static_cast<size_t>(p) * hout * wout;
    int32_t* am = argmax ? argmax->data() + static_cast<size_t>(p) * hout * wout : nullptr;
    for (int oy = 0; oy < hout; ++oy) {
      const int y0 = oy * stride, y1 = std::min(y0 + kernel, x.h);
      for (int ox = 0; ox < wout; ++ox) {
        const int x0 = ox * stride, x1 = std::min(x0 + kernel, x.w);
        Real best = in[static_cast<size_t>(y0) * x.w + x0];
        int32_t besti = y0 * x.w + x0;
        for (int iy = y0; iy < y1; ++iy) {
          for (int ix = x0; ix < x1; ++ix) {
            const Real v = in[static_cast<size_t>(iy) * x.w + ix];
            if (v > best) {  // ties keep the first index in row-major order
              best = v;
              besti = iy * x.w + ix;
            }
          }
        }
        out[oy * wout + ox] = best;
        if (am) am[oy * wout + ox] = besti;
      }
    }
  }
  return y;
}

void maxpool2d_backward(Tensor4& x, const Tensor4& y,
                        std::span<const int32_t> argmax) {
  if (y.grad.empty() || argmax.size() != y.grad.size()) {
    throw std::invalid_argument("maxpool2d_backward: bad argmax");
  }
  if (!x.has_grad()) return;
  const int planes = x.n * x.c;
  const size_t ohw = static_cast<size_t>(y.h) * y.w;
  const size_t ihw = static_cast<size_t>(x.h) * x.w;
#pragma omp parallel for schedule(static) num_threads(num_workers())
  for (int p = 0; p < planes; ++p) {
    Real* gx = x.grad.data() + p * ihw;
    const Real* gy = y.grad.data() + p * ohw;
    const int32_t* am = argmax.data() + p * ohw;
    for (size_t i = 0; i < ohw; ++i) gx[am[i]] += gy[i];
  }
}

Tensor4 batchnorm_forward(const Tensor4& x, const Param& scale,
                          const Param& shift, Param& running_mean,
                          Param& running_var, bool training, Real momentum,
                          Real eps, BatchNormCache* cache) {
  if (scale.shape != std::vector<int>{x.c}) throw std::invalid_argument("batchnorm: bad scale shape");
  const size_t hw = static_cast<size_t>(x.h) * x.w;
  const size_t m = static_cast<size_t>(x.n) * hw;
  if (m == 0) throw std::invalid_argument("batchnorm: empty input");

  Tensor4 y(x.n, x.c, x.h, x.w);
  if (cache) {
    cache->xhat = Tensor4(x.n, x.c, x.h, x.w);
    cache->inv_std.assign(x.c, Real(0));
    cache->training = training;
  }

#pragma omp parallel for schedule(static) num_threads(num_workers())
  for (int c = 0; c < x.c; ++c) {
    Real mean, var;
    if (training) {
      double s = 0, s2 = 0;
      for (int n = 0; n < x.n; ++n) {
        const Real* p = x.plane(n, c);
        for (size_t i = 0; i < hw; ++i) {
          s += p[i];
          s2 += static_cast<double>(p[i]) * p[i];
        }
      }
      mean = static_cast<Real>(s / m);
      var = static_cast<Real>(std::max(0.0, s2 / m - (s / m) * (s / m)));
      running_mean.w[c] = momentum * running_mean.w[c] + (1 - momentum) * mean;
      running_var.w[c] = momentum * running_var.w[c] + (1 - momentum) * var;
    } else {
      mean = running_mean.w[c];
      var = running_var.w[c];
    }
    const Real inv_std = Real(1) / std::sqrt(var + eps);
    if (cache) cache->inv_std[c] = inv_std;
    const Real g = scale.w[c], b = shift.w[c];
    for (int n = 0; n < x.n; ++n) {
      const Real* p = x.plane(n, c);
      Real* q = y.plane(n, c);
      Real* xh = cache ? cache->xhat.plane(n, c) : nullptr;
      for (size_t i = 0; i < hw; ++i) {
        const Real h = (p[i] - mean) * inv_std;
        if (xh) xh[i] = h;
        q[i] = g * h + b;
      }
    }
  }
  return y;
}

void batchnorm_backward(Tensor4& x, const Tensor4& y, Param& scale,
                        Param& shift, const BatchNormCache& cache) {
  if (y.grad.empty()) throw std::invalid_argument("batchnorm_backward: y has no gradient");
  const size_t hw = static_cast<size_t>(x.h) * x.w;
  const double m = static_cast<double>(x.n) * hw;

#pragma omp parallel for schedule(static) num_threads(num_workers())
  for (int c = 0; c < x.c; ++c) {
    double sum_dy = 0, sum_dy_xhat = 0;
    for (int n = 0; n < x.n; ++n) {
      const Real* gy = y.grad.data() + y.idx(n, c, 0, 0);
      const Real* xh = cache.xhat.plane(n, c);
      for (size_t i = 0; i < hw; ++i) {
        sum_dy += gy[i];
        sum_dy_xhat += static_cast<double>(gy[i]) * xh[i];
      }
    }
    scale.g[c] += static_cast<Real>(sum_dy_xhat);
    shift.g[c] += static_cast<Real>(sum_dy);
    if (!x.has_grad()) continue;

    const Real g_inv = scale.w[c] * cache.inv_std[c];
    const Real mean_dy = static_cast<Real>(sum_dy / m);
    const Real mean_dy_xhat = static_cast<Real>(sum_dy_xhat / m);
    for (int n = 0; n < x.n; ++n) {
      const Real* gy = y.grad.data() + y.idx(n, c, 0, 0);
      const Real* xh = cache.xhat.plane(n, c);
      Real* gx = x.grad.data() + x.idx(n, c, 0, 0);
      if (cache.training) {
        for (size_t i = 0; i < hw; ++i) {
          gx[i] += g_inv * (gy[i] - mean_dy - xh[i] * mean_dy_xhat);
        }
      } else {
        for (size_t i = 0; i < hw; ++i) gx[i] += g_inv * gy[i];
      }
    }
  }
}

Tensor4 relu_forward(const Tensor4& x) {
  Tensor4 y(x.n, x.c, x.h, x.w);
  for (size_t i = 0; i < x.size(); ++i) y.val[i] = x.val[i] > 0 ? x.val[i] : Real(0);
  return y;
}

void relu_backward(Tensor4& x, const Tensor4& y) {
  if (!x.has_grad()) return;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x.val[i] > 0) x.grad[i] += y.grad[i];
  }
}

Tensor4 linear_forward(const Tensor4& x, const Param& weight, const Param& bias) {
  const int in = x.c * x.h * x.w;
  if (weight.shape.size() != 2 || weight.shape[1] != in) {
    throw std::invalid_argument("linear: weight/input mismatch");
  }
  const int out = weight.shape[0];
  Tensor4 y(x.n, out, 1, 1);
  gemm_nt(x.n, out, in, x.val.data(), in, weight.w.data(), in, y.val.data(), out, false);
  for (int n = 0; n < x.n; ++n) {
    for (int o = 0; o < out; ++o) y.val[static_cast<size_t>(n) * out + o] += bias.w[o];
  }
  return y;
}

void linear_backward(Tensor4& x, const Tensor4& y, Param& weight, Param& bias) {
  if (y.grad.empty()) throw std::invalid_argument("linear_backward: y has no gradient");
  const int in = x.c * x.h * x.w;
  const int out = weight.shape[0];
  gemm_tn(out, in, x.n, y.grad.data(), out, x.val.data(), in, weight.g.data(), in, true);
  for (int o = 0; o < out; ++o) {
    double s = 0;
    for (int n = 0; n < x.n; ++n) s += y.grad[static_cast<size_t>(n) * out + o];
    bias.g[o] += static_cast<Real>(s);
  }
  if (x.has_grad()) {
    gemm_nn(x.n, in, out, y.grad.data(), out, weight.w.data(), in, x.grad.data(), in, true);
  }
}

Tensor4 sigmoid_forward(const Tensor4& x) {
  Tensor4 y(x.n, x.c, x.h, x.w);
  for (size_t i = 0; i < x.size(); ++i) {
    const Real v = x.val[i];
    if (v >= 0) {
      y.val[i] = Real(1) / (Real(1) + std::exp(-v));
    } else {
      const Real e = std::exp(v);
      y.val[i] = e / (Real(1) + e);
    }
  }
  return y;
}

void sigmoid_backward(Tensor4& x, const Tensor4& y) {
  if (!x.has_grad()) return;
  for (size_t i = 0; i < x.size(); ++i) {
    x.grad[i] += y.grad[i] * y.val[i] * (Real(1) - y.val[i]);
  }
}

double bce_loss(Tensor4& p, std::span<const Real> targets) {
  if (targets.size() != p.size()) throw std::invalid_argument("bce_loss: target size mismatch");
  if (p.size() == 0) throw std::invalid_argument("bce_loss: empty input");
  p.ensure_grad();
  const Real lo = kBceEps, hi = Real(1) - kBceEps;
  double loss = 0;
  const Real inv_count = Real(1) / static_cast<Real>(p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    const Real pc = std::clamp(p.val[i], lo, hi);
    const Real t = targets[i];
    loss -= t * std::log(static_cast<double>(pc)) +
            (1 - t) * std::log(static_cast<double>(1 - pc));
    p.grad[i] += (pc - t) / (pc * (Real(1) - pc)) * inv_count;
  }
  return loss / static_cast<double>(p.size());
}

void adam_step(std::span<Param*> params, const AdamConfig& cfg, int64_t step) {
  if (step < 1) throw std::invalid_argument("adam_step: step must be >= 1");
  const double bc1 = 1.0 - std::pow(static_cast<double>(cfg.beta1), static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(static_cast<double>(cfg.beta2), static_cast<double>(step));
  for (Param* p : params) {
    if (!p->trainable) continue;
    for (size_t i = 0; i < p->size(); ++i) {
      const Real g = p->g[i] + cfg.weight_decay * p->w[i];
      p->m[i] = cfg.beta1 * p->m[i] + (1 - cfg.beta1) * g;
      p->v[i] = cfg.beta2 * p->v[i] + (1 - cfg.beta2) * g * g;
      const Real mhat = static_cast<Real>(p->m[i] / bc1);
      const Real vhat = static_cast<Real>(p->v[i] / bc2);
      p->w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void zero_grads(std::span<Param*> params) {
  for (Param* p : params) {
    if (p->trainable) p->zero_grad();
  }
}

void init_kaiming(Param& weight, int fan_in, Rng& rng) {
  const double std = std::sqrt(2.0 / fan_in);
  for (Real& w : weight.w) w = static_cast<Real>(std * rng.normal());
}

}  // namespace vps
