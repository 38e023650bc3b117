#include "vps/tensor.hpp"

#include <numeric>
#include <stdexcept>

namespace vps {

Tensor4::Tensor4(int n_, int c_, int h_, int w_, bool with_grad)
    : n(n_), c(c_), h(h_), w(w_) {
  if (n < 0 || c < 0 || h < 0 || w < 0) {
    throw std::invalid_argument("Tensor4: negative dimension");
  }
  val.assign(static_cast<size_t>(n) * c * h * w, Real(0));
  if (with_grad) grad.assign(val.size(), Real(0));
}

void Tensor4::ensure_grad() {
  if (grad.size() != val.size()) grad.assign(val.size(), Real(0));
}

void Tensor4::zero_grad() {
  ensure_grad();
  std::fill(grad.begin(), grad.end(), Real(0));
}

Param Param::make(std::string name, std::vector<int> shape, bool trainable) {
  Param p;
  p.name = std::move(name);
  p.shape = std::move(shape);
  size_t total = 1;
  for (int d : p.shape) {
    if (d <= 0) throw std::invalid_argument("Param::make: non-positive dimension");
    total *= static_cast<size_t>(d);
  }
  p.w.assign(total, Real(0));
  p.trainable = trainable;
  if (trainable) {
    p.g.assign(total, Real(0));
    p.m.assign(total, Real(0));
    p.v.assign(total, Real(0));
  }
  return p;
}

}  // namespace vps
