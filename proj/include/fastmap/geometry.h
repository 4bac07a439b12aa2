#pragma once

// Scalar-generic geometric primitives. Every function here is written against
// Eigen expressions so it can be instantiated with double or with
// Eigen::AutoDiffScalar for gradients.

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace fastmap {

template <typename T>
using Vec3 = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Mat3 = Eigen::Matrix<T, 3, 3>;

template <typename T>
Mat3<T> Skew(const Vec3<T>& v) {
  Mat3<T> m;
  m << T(0), -v(2), v(1),  //
      v(2), T(0), -v(0),   //
      -v(1), v(0), T(0);
  return m;
}

// Continuous 6D rotation representation: Gram-Schmidt on the two stacked
// 3-vectors, third column from the cross product.
template <typename Derived>
Mat3<typename Derived::Scalar> Rot6dToMatrix(
    const Eigen::MatrixBase<Derived>& v) {
  using T = typename Derived::Scalar;
  using std::sqrt;
  const Vec3<T> a = v.template head<3>();
  const Vec3<T> b = v.template tail<3>();
  const Vec3<T> c1 = a / sqrt(a.squaredNorm());
  const Vec3<T> b_perp = b - c1.dot(b) * c1;
  const Vec3<T> c2 = b_perp / sqrt(b_perp.squaredNorm());
  Mat3<T> r;
  r.col(0) = c1;
  r.col(1) = c2;
  r.col(2) = c1.cross(c2);
  return r;
}

template <typename T>
Eigen::Matrix<T, 6, 1> MatrixToRot6d(const Mat3<T>& r) {
  Eigen::Matrix<T, 6, 1> v;
  v << r.col(0), r.col(1);
  return v;
}

inline Eigen::Matrix<double, 6, 1> IdentityRot6d() {
  Eigen::Matrix<double, 6, 1> v;
  v << 1, 0, 0, 0, 1, 0;
  return v;
}

// Angle of R1ᵀR2 via clamped acos. Exact at 0 and π; not for gradients.
inline double GeodesicDistance(const Eigen::Matrix3d& r1,
                               const Eigen::Matrix3d& r2) {
  // atan2 rather than acos: acos of the trace loses ~1e-8 rad near zero.
  const Eigen::Matrix3d m = r1.transpose() * r2;
  const double c = 0.5 * (m.trace() - 1.0);
  const Eigen::Vector3d s(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0),
                          m(1, 0) - m(0, 1));
  return std::atan2(0.5 * s.norm(), c);
}

// Same angle as atan2(sin, cos) with the sine taken from the skew part of
// R1ᵀR2. When the skew part is at rounding level (angle 0 or π) the zero
// subgradient is returned; otherwise Adam turns rounding noise into full
// steps away from an exact minimum.
template <typename T>
T SmoothGeodesicDistance(const Mat3<T>& r1, const Mat3<T>& r2) {
  using std::atan2;
  using std::sqrt;
  const Mat3<T> m = r1.transpose() * r2;
  const T c = T(0.5) * (m.trace() - T(1));
  const T sx = T(0.5) * (m(2, 1) - m(1, 2));
  const T sy = T(0.5) * (m(0, 2) - m(2, 0));
  const T sz = T(0.5) * (m(1, 0) - m(0, 1));
  const T s2 = sx * sx + sy * sy + sz * sz;
  if (s2 < T(1e-24)) return atan2(s2 * T(0), c);
  return atan2(sqrt(s2), c);
}

// E = [t]x R, scaled to unit Frobenius norm. A zero t yields a zero matrix.
template <typename T>
Mat3<T> EssentialFromPose(const Mat3<T>& rel_rotation, const Vec3<T>& t) {
  using std::sqrt;
  const Mat3<T> e = Skew(t) * rel_rotation;
  const T norm = sqrt(e.squaredNorm());
  if (norm == T(0)) return e;
  return e / norm;
}

// Row-major flattening, so that x2ᵀ E x1 = flatten(x2 x1ᵀ) · flatten(E).
template <typename T>
Eigen::Matrix<T, 9, 1> FlattenRowMajor(const Mat3<T>& m) {
  Eigen::Matrix<T, 9, 1> v;
  v << m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0),
      m(2, 1), m(2, 2);
  return v;
}

inline Eigen::Vector3d Homogeneous(const Eigen::Vector2d& p) {
  return Eigen::Vector3d(p.x(), p.y(), 1.0);
}

// Angle between two nonzero vectors in radians.
inline double AngleBetween(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

inline double RadToDeg(double rad) { return rad * 180.0 / M_PI; }
inline double DegToRad(double deg) { return deg * M_PI / 180.0; }

}  // namespace fastmap
