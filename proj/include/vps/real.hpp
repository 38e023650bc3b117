#pragma once

// Scalar type used by the tensor kernels. Camera geometry and sphere math
// always run in double; the NN stack defaults to float and switches to
// double when VPS_REAL_DOUBLE is defined (the high-precision gradient-test
// build links the vpscore_f64 flavor of the library).
namespace vps {

#ifdef VPS_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace vps
