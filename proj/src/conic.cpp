#include "vps/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>

#include "vps/gemm.hpp"
#include "vps/parallel.hpp"

namespace vps {

namespace {

constexpr int kTile = 256;
constexpr int kTaps = 9;

void check_args(const Tensor4& x, std::span<const ConicFrame> frames,
                const Param& weight, const Param& bias) {
  if (weight.shape.size() != 4 || weight.shape[2] != 3 || weight.shape[3] != 3) {
    throw std::invalid_argument("conic_conv: weight must be (C_out, C_in, 3, 3)");
  }
  if (x.c == 0 || weight.shape[1] != x.c) {
    throw std::invalid_argument("conic_conv: channel mismatch");
  }
  if (bias.shape.size() != 1 || bias.shape[0] != weight.shape[0]) {
    throw std::invalid_argument("conic_conv: bias/weight mismatch");
  }
  if (frames.empty() || (frames.size() != 1 && static_cast<int>(frames.size()) != x.n)) {
    throw std::invalid_argument("conic_conv: need 1 or N frames");
  }
  for (const ConicFrame& f : frames) {
    if (f.h != x.h || f.w != x.w) {
      throw std::invalid_argument("conic_conv: frame/input shape mismatch");
    }
  }
}

inline const ConicFrame& frame_for(std::span<const ConicFrame> frames, int n) {
  return frames.size() == 1 ? frames[0] : frames[n];
}

// Sample position of tap (dx, dy) at pixel p in frame f.
inline void tap_position(const ConicFrame& f, int px, int py, int dx, int dy,
                         double* sx, double* sy) {
  const double tx = f.tx[f.idx(py, px)];
  const double ty = f.ty[f.idx(py, px)];
  *sx = px + dx * tx - dy * ty;
  *sy = py + dx * ty + dy * tx;
}

// Bilinear read with zero padding outside the map; double accumulation.
inline double bilinear_at(const Real* plane, int h, int w, double sx, double sy) {
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0, fy = sy - y0;
  double acc = 0.0;
  auto corner = [&](int cx, int cy, double cw) {
    if (cx >= 0 && cx < w && cy >= 0 && cy < h && cw != 0.0) {
      acc += cw * plane[static_cast<size_t>(cy) * w + cx];
    }
  };
  corner(x0, y0, (1 - fx) * (1 - fy));
  corner(x0 + 1, y0, fx * (1 - fy));
  corner(x0, y0 + 1, (1 - fx) * fy);
  corner(x0 + 1, y0 + 1, fx * fy);
  return acc;
}

// Precomputed bilinear geometry for one pixel tile: per (tap, pixel), the
// four corner offsets into the channel plane and their weights. Out-of-map
// corners get offset 0 and weight 0 so the gather loop stays branch-free.
struct TileGeometry {
  int32_t i00[kTaps * kTile], i01[kTaps * kTile];
  int32_t i10[kTaps * kTile], i11[kTaps * kTile];
  Real w00[kTaps * kTile], w01[kTaps * kTile];
  Real w10[kTaps * kTile], w11[kTaps * kTile];
};

void build_tile_geometry(const ConicFrame& f, int pix0, int count, TileGeometry* g) {
  for (int tap = 0; tap < kTaps; ++tap) {
    const int dy = tap / 3 - 1, dx = tap % 3 - 1;
    const int base = tap * kTile;
    for (int t = 0; t < count; ++t) {
      const int pix = pix0 + t;
      const int py = pix / f.w, px = pix % f.w;
      double sx, sy;
      tap_position(f, px, py, dx, dy, &sx, &sy);
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const Real fx = static_cast<Real>(sx - x0);
      const Real fy = static_cast<Real>(sy - y0);
      const Real cw[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      const int cx[4] = {x0, x0 + 1, x0, x0 + 1};
      const int cy[4] = {y0, y0, y0 + 1, y0 + 1};
      int32_t* gi[4] = {g->i00, g->i01, g->i10, g->i11};
      Real* gw[4] = {g->w00, g->w01, g->w10, g->w11};
      for (int k = 0; k < 4; ++k) {
        const bool in = cx[k] >= 0 && cx[k] < f.w && cy[k] >= 0 && cy[k] < f.h;
        gi[k][base + t] = in ? cy[k] * f.w + cx[k] : 0;
        gw[k][base + t] = in ? cw[k] : Real(0);
      }
    }
  }
}

void gather_tile(const Tensor4& x, int n, const TileGeometry& g, int count, Real* col) {
  // col rows are ordered (channel, tap) to match the flattened weights.
  for (int c = 0; c < x.c; ++c) {
    const Real* plane = x.plane(n, c);
    for (int tap = 0; tap < kTaps; ++tap) {
      Real* dst = col + (static_cast<size_t>(c) * kTaps + tap) * count;
      const int base = tap * kTile;
      for (int t = 0; t < count; ++t) {
        dst[t] = g.w00[base + t] * plane[g.i00[base + t]] +
                 g.w01[base + t] * plane[g.i01[base + t]] +
                 g.w10[base + t] * plane[g.i10[base + t]] +
                 g.w11[base + t] * plane[g.i11[base + t]];
      }
    }
  }
}

}  // namespace

ConicFrame build_conic_frame(int h, int w, const ImagePoint& v) {
  if (h < 1 || w < 1) throw std::invalid_argument("build_conic_frame: empty map");
  if (!std::isfinite(v.u) || !std::isfinite(v.v)) {
    throw std::invalid_argument("build_conic_frame: non-finite center");
  }
  ConicFrame f;
  f.h = h;
  f.w = w;
  f.vx = v.u;
  f.vy = v.v;
  f.tx.resize(static_cast<size_t>(h) * w);
  f.ty.resize(static_cast<size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = v.u - x, dy = v.v - y;
      const double norm = std::sqrt(dx * dx + dy * dy);
      const size_t i = f.idx(y, x);
      if (norm < kConicSingularEps) {
        f.tx[i] = 1.0;
        f.ty[i] = 0.0;
      } else {
        f.tx[i] = dx / norm;
        f.ty[i] = dy / norm;
      }
    }
  }
  return f;
}

Tensor4 conic_conv_reference(const Tensor4& x, std::span<const ConicFrame> frames,
                             const Param& weight, const Param& bias) {
  check_args(x, frames, weight, bias);
  const int cout = weight.shape[0];
  Tensor4 y(x.n, cout, x.h, x.w);

  const int planes = x.n * cout;
#pragma omp parallel for schedule(static) num_threads(num_workers())
  for (int pl = 0; pl < planes; ++pl) {
    const int n = pl / cout, co = pl % cout;
    const ConicFrame& f = frame_for(frames, n);
    const Real* wbase = weight.w.data() + static_cast<size_t>(co) * x.c * kTaps;
    Real* out = y.val.data() + y.idx(n, co, 0, 0);
    for (int py = 0; py < x.h; ++py) {
      for (int px = 0; px < x.w; ++px) {
        double acc = bias.w[co];
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            double sx, sy;
            tap_position(f, px, py, dx, dy, &sx, &sy);
            const int tap = (dy + 1) * 3 + (dx + 1);
            for (int c = 0; c < x.c; ++c) {
              acc += wbase[static_cast<size_t>(c) * kTaps + tap] *
                     bilinear_at(x.plane(n, c), x.h, x.w, sx, sy);
            }
          }
        }
        out[static_cast<size_t>(py) * x.w + px] = static_cast<Real>(acc);
      }
    }
  }
  return y;
}

Tensor4 conic_conv_fast(const Tensor4& x, std::span<const ConicFrame> frames,
                        const Param& weight, const Param& bias) {
  check_args(x, frames, weight, bias);
  const int cout = weight.shape[0];
  const int K = x.c * kTaps;
  const int hw = x.h * x.w;
  Tensor4 y(x.n, cout, x.h, x.w);

  const int tiles = (hw + kTile - 1) / kTile;
  const int total = x.n * tiles;
#pragma omp parallel num_threads(num_workers())
  {
    auto geo = std::make_unique<TileGeometry>();
    std::vector<Real> col(static_cast<size_t>(K) * kTile);
#pragma omp for schedule(static)
    for (int job = 0; job < total; ++job) {
      const int n = job / tiles;
      const int pix0 = (job % tiles) * kTile;
      const int count = std::min(kTile, hw - pix0);
      build_tile_geometry(frame_for(frames, n), pix0, count, geo.get());
      gather_tile(x, n, *geo, count, col.data());
      gemm_nn(cout, count, K, weight.w.data(), K, col.data(), count,
              y.val.data() + y.idx(n, 0, 0, 0) + pix0, hw, false);
      for (int co = 0; co < cout; ++co) {
        Real* row = y.val.data() + y.idx(n, co, 0, 0) + pix0;
        const Real b = bias.w[co];
        for (int t = 0; t < count; ++t) row[t] += b;
      }
    }
  }
  return y;
}

void conic_conv_backward(Tensor4& x, const Tensor4& y,
                         std::span<const ConicFrame> frames, Param& weight,
                         Param& bias) {
  check_args(x, frames, weight, bias);
  if (y.grad.empty()) throw std::invalid_argument("conic_conv_backward: y has no gradient");
  const int cout = weight.shape[0];
  const int K = x.c * kTaps;
  const int hw = x.h * x.w;

  for (int co = 0; co < cout; ++co) {
    double s = 0;
    for (int n = 0; n < y.n; ++n) {
      const Real* g = y.grad.data() + y.idx(n, co, 0, 0);
      for (int i = 0; i < hw; ++i) s += g[i];
    }
    bias.g[co] += static_cast<Real>(s);
  }

  const int tiles = (hw + kTile - 1) / kTile;
  auto geo = std::make_unique<TileGeometry>();
  std::vector<Real> col(static_cast<size_t>(K) * kTile);
  std::vector<Real> gcol(x.has_grad() ? col.size() : 0);

  for (int n = 0; n < x.n; ++n) {
    const ConicFrame& f = frame_for(frames, n);
    const Real* gy = y.grad.data() + y.idx(n, 0, 0, 0);
    for (int tile = 0; tile < tiles; ++tile) {
      const int pix0 = tile * kTile;
      const int count = std::min(kTile, hw - pix0);
      build_tile_geometry(f, pix0, count, geo.get());
      gather_tile(x, n, *geo, count, col.data());
      // weight.g += gy_tile * col^T; gy columns for this tile sit at offset
      // pix0 in each output row.
      std::vector<Real> gy_tile(static_cast<size_t>(cout) * count);
      for (int co = 0; co < cout; ++co) {
        std::memcpy(gy_tile.data() + static_cast<size_t>(co) * count,
                    gy + static_cast<size_t>(co) * hw + pix0, sizeof(Real) * count);
      }
      gemm_nt(cout, K, count, gy_tile.data(), count, col.data(), count,
              weight.g.data(), K, true);
      if (!x.has_grad()) continue;

      gemm_tn(K, count, cout, weight.w.data(), K, gy_tile.data(), count,
              gcol.data(), count, false);
      // Scatter each sample's gradient into its four bilinear corners.
      for (int c = 0; c < x.c; ++c) {
        Real* gplane = x.grad.data() + x.idx(n, c, 0, 0);
        for (int tap = 0; tap < kTaps; ++tap) {
          const Real* src = gcol.data() + (static_cast<size_t>(c) * kTaps + tap) * count;
          const int base = tap * kTile;
          for (int t = 0; t < count; ++t) {
            const Real g = src[t];
            gplane[geo->i00[base + t]] += g * geo->w00[base + t];
            gplane[geo->i01[base + t]] += g * geo->w01[base + t];
            gplane[geo->i10[base + t]] += g * geo->w10[base + t];
            gplane[geo->i11[base + t]] += g * geo->w11[base + t];
          }
        }
      }
    }
  }
}

}  // namespace vps
