#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vps/real.hpp"

namespace vps {

// Dense N x C x H x W feature map, row-major, with an optional gradient
// plane of the same shape. The currency of every NN kernel here.
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<Real> val;
  std::vector<Real> grad;  // empty unless ensure_grad() was called

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_, bool with_grad = false);

  size_t size() const { return val.size(); }
  bool same_shape(const Tensor4& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  size_t idx(int in, int ic, int iy, int ix) const {
    return ((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix;
  }
  Real& at(int in, int ic, int iy, int ix) { return val[idx(in, ic, iy, ix)]; }
  Real at(int in, int ic, int iy, int ix) const { return val[idx(in, ic, iy, ix)]; }

  Real* plane(int in, int ic) { return val.data() + idx(in, ic, 0, 0); }
  const Real* plane(int in, int ic) const { return val.data() + idx(in, ic, 0, 0); }

  bool has_grad() const { return !grad.empty(); }
  void ensure_grad();
  void zero_grad();
};

// One named parameter tensor. Trainable parameters carry a gradient and the
// two Adam moment buffers; running statistics set trainable = false and own
// only the value buffer.
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<Real> w;
  std::vector<Real> g;
  std::vector<Real> m;
  std::vector<Real> v;
  bool trainable = true;

  static Param make(std::string name, std::vector<int> shape, bool trainable = true);
  size_t size() const { return w.size(); }
  void zero_grad() { std::fill(g.begin(), g.end(), Real(0)); }
};

}  // namespace vps
