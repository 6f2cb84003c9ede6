#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace birot {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Cross-product matrix: skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

/// Inverse of skew() on the antisymmetric part of m.
Vec3 vee(const Mat3& m);

/// True when m^T m == I and det(m) == 1, each within tol per entry.
bool IsRotationMatrix(const Mat3& m, double tol = 1e-9);

/// Element of SO(3). The stored matrix always passes IsRotationMatrix(.., 1e-9);
/// products that drift past that are projected back onto the group.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  /// Throws Error(kInvalidRotation) when m is not a rotation within tol.
  static Rotation FromMatrix(const Mat3& m, double tol = 1e-9);

  /// Nearest rotation in the Frobenius sense (polar decomposition via SVD).
  static Rotation Nearest(const Mat3& m);

  static Rotation Identity() { return Rotation(); }

  /// Half-turn about basis axis `axis` (1 = X, 2 = Y, 3 = Z).
  static Rotation HalfTurn(int axis);

  const Mat3& matrix() const { return m_; }

  /// Row r (0-based) as a column vector.
  Vec3 row(int r) const { return m_.row(r).transpose(); }

  Rotation inverse() const { return Rotation(m_.transpose(), Unchecked{}); }

  Rotation operator*(const Rotation& other) const;
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}

  Mat3 m_;
};

/// Rodrigues' formula; Taylor expansion below |theta| = 1e-6.
Rotation ExpSO3(const Vec3& theta);

/// Rotation vector with |theta| in [0, pi].
Vec3 LogSO3(const Rotation& r);

/// Geodesic angle between two rotations in radians, in [0, pi].
double GeodesicAngle(const Rotation& a, const Rotation& b);

}  // namespace birot
