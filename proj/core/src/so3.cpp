#include "birotation/so3.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "birotation/error.hpp"

namespace birot {

namespace {

constexpr double kSmallAngle = 1e-6;

}  // namespace

const char* ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidRotation: return "InvalidRotation";
    case ErrorCode::kDegenerateBearing: return "DegenerateBearing";
    case ErrorCode::kAmbiguousCheirality: return "AmbiguousCheirality";
    case ErrorCode::kTooFewInliers: return "TooFewInliers";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kIndeterminateSign: return "IndeterminateSign";
    case ErrorCode::kVisibilityExhausted: return "VisibilityExhausted";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kInput: return "Input";
  }
  return "Unknown";
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  return Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)) * 0.5;
}

bool IsRotationMatrix(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  const Mat3 gram = m.transpose() * m;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(m.determinant() - 1.0) <= tol;
}

Rotation Rotation::FromMatrix(const Mat3& m, double tol) {
  if (!IsRotationMatrix(m, tol)) {
    throw Error(ErrorCode::kInvalidRotation,
                "matrix is not in SO(3) within tolerance " + std::to_string(tol));
  }
  return Rotation(m, Unchecked{});
}

Rotation Rotation::Nearest(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return Rotation(u * v.transpose(), Unchecked{});
}

Rotation Rotation::HalfTurn(int axis) {
  Mat3 m = -Mat3::Identity();
  m(axis - 1, axis - 1) = 1.0;
  return Rotation(m, Unchecked{});
}

Rotation Rotation::operator*(const Rotation& other) const {
  Mat3 product = m_ * other.m_;
  if (!IsRotationMatrix(product, 1e-9)) return Nearest(product);
  return Rotation(product, Unchecked{});
}

Rotation ExpSO3(const Vec3& theta) {
  const double angle2 = theta.squaredNorm();
  const double angle = std::sqrt(angle2);
  const Mat3 k = skew(theta);
  double a;  // sin(angle) / angle
  double b;  // (1 - cos(angle)) / angle^2
  if (angle < kSmallAngle) {
    a = 1.0 - angle2 / 6.0;
    b = 0.5 - angle2 / 24.0;
  } else {
    a = std::sin(angle) / angle;
    b = (1.0 - std::cos(angle)) / angle2;
  }
  Mat3 m = Mat3::Identity() + a * k + b * (k * k);
  if (!IsRotationMatrix(m, 1e-9)) return Rotation::Nearest(m);
  return Rotation::FromMatrix(m);
}

Vec3 LogSO3(const Rotation& r) {
  const Mat3& m = r.matrix();
  const Vec3 w = vee(m);  // sin(angle) * axis
  const double s = w.norm();
  const double c = std::clamp((m.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double angle = std::atan2(s, c);

  if (angle < kSmallAngle) {
    // angle / sin(angle) ~ 1 + angle^2 / 6
    return w * (1.0 + angle * angle / 6.0);
  }
  if (c > -0.99) {
    return w * (angle / s);
  }

  // Near pi the antisymmetric part vanishes; read the axis from the symmetric
  // part instead: (R + R^T)/2 - c I = (1 - c) n n^T.
  const Mat3 sym = (m + m.transpose()) * 0.5 - c * Mat3::Identity();
  int k = 0;
  sym.diagonal().maxCoeff(&k);
  Vec3 axis = sym.col(k) / std::sqrt(std::max(sym(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(w) < 0.0) axis = -axis;
  return axis * angle;
}

double GeodesicAngle(const Rotation& a, const Rotation& b) {
  return LogSO3(a.inverse() * b).norm();
}

}  // namespace birot
