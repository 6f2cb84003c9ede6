#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "birotation/pose_model.hpp"
#include "birotation/so3.hpp"

namespace birot {

/// Row indices (0-based) entering the model-i angle atan2(r_j . p, r_k . p):
/// i = 1 -> (j, k) = (2, 3), i = 2 -> (1, 3), i = 3 -> (1, 2).
struct ModelRows {
  int j;
  int k;
};

constexpr ModelRows RowsFor(Axis model) {
  switch (model) {
    case Axis::kX: return {1, 2};
    case Axis::kY: return {0, 2};
    case Axis::kZ: return {0, 1};
  }
  return {1, 2};
}

/// Both j and k components below this magnitude make the angle undefined.
inline constexpr double kBearingComponentFloor = 1e-12;
/// Squared-denominator floor of the analytic Jacobian rows.
inline constexpr double kJacobianDenominatorFloor = 1e-12;

/// Wraps an angle into (-pi, pi].
double WrapAngle(double a);

/// Angular residual of one correspondence under birotation model `model`.
/// Throws DegenerateBearingError (index 0) for a bearing on the model axis.
double Residual(Axis model, const Rotation& r1, const Rotation& r2,
                const Vec3& bar1, const Vec3& bar2);

struct ResidualVector {
  Axis model = Axis::kX;
  std::vector<double> e;
};

/// Residual of every correspondence; DegenerateBearingError carries the index.
ResidualVector ComputeResiduals(Axis model, const Rotation& r1,
                                const Rotation& r2, const CorrespondenceSet& set);

/// d e / d theta under left perturbation R <- exp([theta]x) R.
struct JacobianRow {
  Vec3 d_theta1;
  Vec3 d_theta2;
};

struct JacobianBlock {
  Axis model = Axis::kX;
  std::vector<JacobianRow> rows;

  /// N x 6 matrix, columns (theta1, theta2).
  Eigen::MatrixXd Assemble() const;
};

/// Analytic Jacobian row for bearings already rotated (p1 = R1 bar1, p2 = R2 bar2).
/// Returns false when either squared denominator is below the floor.
bool JacobianRowAt(Axis model, const Vec3& p1, const Vec3& p2, JacobianRow& row);

JacobianBlock ComputeJacobian(Axis model, const Rotation& r1, const Rotation& r2,
                              const CorrespondenceSet& set);

/// 0/1 weights; 1 marks a correspondence used in the metric.
using InlierMask = std::vector<std::uint8_t>;

/// d_hat = sum_n mask_n e_n^2, accumulated in index order.
double DiscretizedMetric(std::span<const double> e,
                         std::span<const std::uint8_t> mask);

/// d_hat + alpha (|log R1|^2 + |log R2|^2).
double Energy(std::span<const double> e, std::span<const std::uint8_t> mask,
              const Rotation& r1, const Rotation& r2, double alpha);

/// Residuals and (optionally) Jacobian rows with a per-item validity flag in
/// place of exceptions; used inside the solver loop.
struct ModelEvaluation {
  std::vector<double> e;
  std::vector<JacobianRow> jacobian;
  std::vector<std::uint8_t> valid;
};

ModelEvaluation EvaluateModel(Axis model, const Rotation& r1, const Rotation& r2,
                              const CorrespondenceSet& set, bool with_jacobian);

}  // namespace birot
