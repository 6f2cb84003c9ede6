#include "birotation/residuals.hpp"

#include <cmath>
#include <string>

#include "birotation/error.hpp"

namespace birot {

namespace {

struct Angle {
  double value;
  bool degenerate;
};

Angle ModelAngle(Axis model, const Vec3& p) {
  const ModelRows rows = RowsFor(model);
  const double num = p[rows.j];
  const double den = p[rows.k];
  const bool degenerate = std::abs(num) < kBearingComponentFloor &&
                          std::abs(den) < kBearingComponentFloor;
  return {std::atan2(num, den), degenerate};
}

double SquaredDenominator(Axis model, const Vec3& p) {
  const ModelRows rows = RowsFor(model);
  return p[rows.j] * p[rows.j] + p[rows.k] * p[rows.k];
}

[[noreturn]] void ThrowDegenerate(std::size_t index) {
  throw DegenerateBearingError(
      index, "bearing " + std::to_string(index) +
                 " lies on the model axis; its angle is undefined");
}

}  // namespace

double WrapAngle(double a) {
  // Differences of two atan2 values need at most one correction; the
  // remainder path is for arbitrary callers.
  if (std::abs(a) > 3.0 * M_PI) {
    a = std::remainder(a, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    return a;
  }
  if (a > M_PI) {
    a -= 2.0 * M_PI;
  } else if (a <= -M_PI) {
    a += 2.0 * M_PI;
  }
  return a;
}

double Residual(Axis model, const Rotation& r1, const Rotation& r2,
                const Vec3& bar1, const Vec3& bar2) {
  const Angle a1 = ModelAngle(model, r1 * bar1);
  const Angle a2 = ModelAngle(model, r2 * bar2);
  if (a1.degenerate || a2.degenerate) ThrowDegenerate(0);
  return WrapAngle(a1.value - a2.value);
}

ResidualVector ComputeResiduals(Axis model, const Rotation& r1,
                                const Rotation& r2,
                                const CorrespondenceSet& set) {
  ResidualVector out;
  out.model = model;
  out.e.resize(set.size());
  for (std::size_t n = 0; n < set.size(); ++n) {
    const Angle a1 = ModelAngle(model, r1 * set[n].bar1);
    const Angle a2 = ModelAngle(model, r2 * set[n].bar2);
    if (a1.degenerate || a2.degenerate) ThrowDegenerate(n);
    out.e[n] = WrapAngle(a1.value - a2.value);
  }
  return out;
}

bool JacobianRowAt(Axis model, const Vec3& p1, const Vec3& p2, JacobianRow& row) {
  const double den1 = SquaredDenominator(model, p1);
  const double den2 = SquaredDenominator(model, p2);
  if (den1 < kJacobianDenominatorFloor || den2 < kJacobianDenominatorFloor) {
    return false;
  }
  const double x1 = p1.x(), y1 = p1.y(), z1 = p1.z();
  const double x2 = p2.x(), y2 = p2.y(), z2 = p2.z();
  switch (model) {
    case Axis::kX:
      row.d_theta1 = Vec3(-1.0, x1 * y1 / den1, x1 * z1 / den1);
      row.d_theta2 = Vec3(1.0, -x2 * y2 / den2, -x2 * z2 / den2);
      break;
    case Axis::kY:
      row.d_theta1 = Vec3(-x1 * y1 / den1, 1.0, -y1 * z1 / den1);
      row.d_theta2 = Vec3(x2 * y2 / den2, -1.0, y2 * z2 / den2);
      break;
    case Axis::kZ:
      row.d_theta1 = Vec3(x1 * z1 / den1, y1 * z1 / den1, -1.0);
      row.d_theta2 = Vec3(-x2 * z2 / den2, -y2 * z2 / den2, 1.0);
      break;
  }
  return true;
}

Eigen::MatrixXd JacobianBlock::Assemble() const {
  Eigen::MatrixXd j(static_cast<Eigen::Index>(rows.size()), 6);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto r = static_cast<Eigen::Index>(n);
    j.block<1, 3>(r, 0) = rows[n].d_theta1.transpose();
    j.block<1, 3>(r, 3) = rows[n].d_theta2.transpose();
  }
  return j;
}

JacobianBlock ComputeJacobian(Axis model, const Rotation& r1, const Rotation& r2,
                              const CorrespondenceSet& set) {
  JacobianBlock out;
  out.model = model;
  out.rows.resize(set.size());
  for (std::size_t n = 0; n < set.size(); ++n) {
    if (!JacobianRowAt(model, r1 * set[n].bar1, r2 * set[n].bar2, out.rows[n])) {
      ThrowDegenerate(n);
    }
  }
  return out;
}

double DiscretizedMetric(std::span<const double> e,
                         std::span<const std::uint8_t> mask) {
  if (e.size() != mask.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "residual and mask lengths differ");
  }
  double sum = 0.0;
  for (std::size_t n = 0; n < e.size(); ++n) {
    if (mask[n]) sum += e[n] * e[n];
  }
  return sum;
}

double Energy(std::span<const double> e, std::span<const std::uint8_t> mask,
              const Rotation& r1, const Rotation& r2, double alpha) {
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be positive");
  }
  const double reg = LogSO3(r1).squaredNorm() + LogSO3(r2).squaredNorm();
  return DiscretizedMetric(e, mask) + alpha * reg;
}

ModelEvaluation EvaluateModel(Axis model, const Rotation& r1, const Rotation& r2,
                              const CorrespondenceSet& set, bool with_jacobian) {
  ModelEvaluation out;
  const std::size_t n_items = set.size();
  out.e.assign(n_items, 0.0);
  out.valid.assign(n_items, 0);
  if (with_jacobian) out.jacobian.resize(n_items);

  for (std::size_t n = 0; n < n_items; ++n) {
    const Vec3 p1 = r1 * set[n].bar1;
    const Vec3 p2 = r2 * set[n].bar2;
    if (SquaredDenominator(model, p1) < kJacobianDenominatorFloor ||
        SquaredDenominator(model, p2) < kJacobianDenominatorFloor) {
      continue;
    }
    out.valid[n] = 1;
    out.e[n] = WrapAngle(ModelAngle(model, p1).value - ModelAngle(model, p2).value);
    if (with_jacobian) JacobianRowAt(model, p1, p2, out.jacobian[n]);
  }
  return out;
}

}  // namespace birot
