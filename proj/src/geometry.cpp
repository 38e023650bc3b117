#include "vps/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vps {

bool CameraIntrinsics::valid() const {
  return f > 0.0 && std::isfinite(f) && std::isfinite(cx) && std::isfinite(cy);
}

UnitDirection UnitDirection::canonical() const {
  if (z > 0.0) return *this;
  if (z < 0.0) return -*this;
  // z == 0: break the tie on x, then y.
  if (x > 0.0) return *this;
  if (x < 0.0) return -*this;
  return y >= 0.0 ? *this : -*this;
}

UnitDirection UnitDirection::normalized(double x, double y, double z) {
  const double n = std::sqrt(x * x + y * y + z * z);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("UnitDirection::normalized: zero or non-finite vector");
  }
  return UnitDirection{x / n, y / n, z / n}.canonical();
}

double dot(const UnitDirection& a, const UnitDirection& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

UnitDirection cross(const UnitDirection& a, const UnitDirection& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

UnitDirection vp_to_direction(const ImagePoint& v, const CameraIntrinsics& K) {
  if (!K.valid()) throw std::invalid_argument("vp_to_direction: invalid intrinsics");
  return UnitDirection::normalized(v.u - K.cx, v.v - K.cy, K.f);
}

std::optional<ImagePoint> direction_to_vp(const UnitDirection& d,
                                          const CameraIntrinsics& K) {
  if (std::abs(d.z) <= kIdealZEpsilon) return std::nullopt;
  return ImagePoint{K.f * d.x / d.z + K.cx, K.f * d.y / d.z + K.cy};
}

double angular_distance(const UnitDirection& d1, const UnitDirection& d2) {
  const double c = std::min(1.0, std::abs(dot(d1, d2)));
  return std::acos(c);
}

}  // namespace vps
