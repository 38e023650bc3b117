#pragma once

#include <optional>

namespace vps {

// Pinhole camera with square pixels and axis-aligned sensor. Image
// coordinates have their origin at the top-left pixel center, u grows to
// the right and v grows downward; pixel centers sit on integer coordinates.
struct CameraIntrinsics {
  double f = 1.0;   // focal length in pixels, > 0
  double cx = 0.0;  // optical center
  double cy = 0.0;

  bool valid() const;
};

struct ImagePoint {
  double u = 0.0;
  double v = 0.0;
};

// Point on the unit sphere identifying a 3D line direction. Antipodes name
// the same direction, so values are kept in a canonical half-space:
// z > 0, or z == 0 and x > 0, or z == x == 0 and y > 0.
struct UnitDirection {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  // Normalizes and canonicalizes; the input must be nonzero.
  static UnitDirection normalized(double x, double y, double z);

  // No normalization or sign fixing; for tests and intermediate math.
  static UnitDirection raw(double x, double y, double z) { return {x, y, z}; }

  UnitDirection canonical() const;
  UnitDirection operator-() const { return {-x, -y, -z}; }
};

double dot(const UnitDirection& a, const UnitDirection& b);
UnitDirection cross(const UnitDirection& a, const UnitDirection& b);

// Below this |z| a direction counts as parallel to the image plane and has
// no finite vanishing point.
inline constexpr double kIdealZEpsilon = 1e-8;

// Line direction of the pencil of 3D lines whose projections meet at v.
UnitDirection vp_to_direction(const ImagePoint& v, const CameraIntrinsics& K);

// Inverse of vp_to_direction; empty for ideal points (|z| <= kIdealZEpsilon).
std::optional<ImagePoint> direction_to_vp(const UnitDirection& d,
                                          const CameraIntrinsics& K);

// Metric on line directions: arccos|d1.d2|, in [0, pi/2]. Insensitive to
// the sign of either argument.
double angular_distance(const UnitDirection& d1, const UnitDirection& d2);

}  // namespace vps
