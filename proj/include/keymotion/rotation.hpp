#pragma once

// 6-D rotation representation: the first two columns of the rotation matrix,
// decoded back by Gram-Schmidt.

#include <array>
#include <cmath>
#include <random>

#include "keymotion/errors.hpp"

namespace keymotion {

using Mat3 = std::array<double, 9>;   // row-major
using Vec3 = std::array<double, 3>;
using SixD = std::array<double, 6>;

inline double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm3(const Vec3& a) { return std::sqrt(dot3(a, a)); }

inline Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline Mat3 identity3() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }

inline Mat3 matmul3(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
      out[i * 3 + j] = s;
    }
  return out;
}

inline double det3(const Mat3& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

inline bool is_rotation(const Mat3& m, double tol = 1e-6) {
  // R^T R == I and det == +1
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += m[k * 3 + i] * m[k * 3 + j];
      double want = (i == j) ? 1.0 : 0.0;
      if (std::abs(s - want) > tol) return false;
    }
  return std::abs(det3(m) - 1.0) <= tol;
}

// First two columns, column-major concatenation.
inline SixD rotmat_to_6d(const Mat3& r) {
  if (!is_rotation(r)) throw ValidationError("rotmat_to_6d: input is not a rotation matrix");
  return {r[0], r[3], r[6], r[1], r[4], r[7]};
}

inline Mat3 sixd_to_rotmat(const SixD& v) {
  Vec3 a{v[0], v[1], v[2]};
  Vec3 b{v[3], v[4], v[5]};
  double na = norm3(a), nb = norm3(b);
  if (na <= 1e-8 || nb <= 1e-8) throw ValidationError("sixd_to_rotmat: near-zero column");
  Vec3 b1{a[0] / na, a[1] / na, a[2] / na};
  double cosang = dot3(b1, {b[0] / nb, b[1] / nb, b[2] / nb});
  if (std::abs(cosang) >= 1.0 - 1e-8) throw ValidationError("sixd_to_rotmat: collinear columns");
  double proj = dot3(b1, b);
  Vec3 u{b[0] - proj * b1[0], b[1] - proj * b1[1], b[2] - proj * b1[2]};
  double nu = norm3(u);
  Vec3 b2{u[0] / nu, u[1] / nu, u[2] / nu};
  Vec3 b3 = cross3(b1, b2);
  return {b1[0], b2[0], b3[0], b1[1], b2[1], b3[1], b1[2], b2[2], b3[2]};
}

inline Mat3 axis_angle(const Vec3& axis, double angle) {
  double n = norm3(axis);
  if (n <= 1e-12) throw ValidationError("axis_angle: zero axis");
  double x = axis[0] / n, y = axis[1] / n, z = axis[2] / n;
  double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  return {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
          t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
          t * x * z - s * y, t * y * z + s * x, t * z * z + c};
}

// Uniform over SO(3) via random unit quaternion.
inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  double q[4];
  double n = 0.0;
  do {
    n = 0.0;
    for (double& c : q) {
      c = gauss(rng);
      n += c * c;
    }
  } while (n < 1e-12);
  n = std::sqrt(n);
  double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

}  // namespace keymotion
