#pragma once

#include <map>
#include <span>
#include <vector>

#include "birotation/pose_model.hpp"
#include "birotation/so3.hpp"

namespace birot {

/// Geodesic rotation error in degrees, arccos((tr(R*^T R^) - 1) / 2).
double RotationErrorDeg(const Rotation& estimate, const Rotation& truth);

/// Folded angle between translation directions in degrees, in [0, 90].
/// 0 when both are zero, 180 when exactly one is zero.
double TranslationErrorDeg(const Vec3& estimate, const Vec3& truth);

struct PoseError {
  double rotation_deg = 0.0;
  double translation_deg = 0.0;
};

/// Ground-truth (or any reference) pose with a metric translation.
struct PoseSample {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();
};

/// Area under the cumulative error curve up to each threshold, in percent:
/// 100 / (M psi) * sum_m max(0, psi - err_m).
std::map<double, double> Auc(std::span<const double> errors_deg,
                             std::span<const double> thresholds_deg);

struct ErrorSummary {
  Vec3 delta_theta_bar = Vec3::Zero();  // radians
  Vec3 delta_t_bar = Vec3::Zero();      // input translation units
  std::vector<PoseError> per_pair;
  std::map<double, double> auc;
  bool rotation_only = false;  // every ground-truth translation is zero
};

/// Mean absolute rotation-vector and translation differences plus AUC over
/// max(eps_r, eps_t) (or eps_r alone when no pair translates).
/// Throws Error(kLengthMismatch) on unequal or empty inputs.
ErrorSummary SummarizeErrors(std::span<const PoseSample> estimates,
                             std::span<const PoseSample> truths,
                             std::span<const double> thresholds_deg);

/// Rotation vector of `r` whose sign is chosen closest to `reference` when the
/// angle sits at pi (where both signs describe the same rotation).
Vec3 RotationVectorNear(const Rotation& r, const Vec3& reference);

}  // namespace birot
