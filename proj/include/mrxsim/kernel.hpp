#pragma once

#include <mrxsim/errors.hpp>
#include <mrxsim/types.hpp>

namespace mrx {

// Point-dipole interaction matrix 3 r r^T / |r|^5 - I / |r|^3, in m^-3.
// Symmetric, trace-free and even in r.
inline Mat3 dipole_kernel(const Vec3& r) {
  const double r2 = r.squaredNorm();
  if (!(r2 > 0.0)) throw GeometryError("dipole_kernel: zero separation vector");
  const double rn = std::sqrt(r2);
  const double r3 = r2 * rn;
  const double r5 = r3 * r2;
  Mat3 k;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      k(i, j) = 3.0 * (r[i] * r[j]) / r5 - (i == j ? 1.0 / r3 : 0.0);
      k(j, i) = k(i, j);
    }
  }
  return k;
}

}  // namespace mrx
