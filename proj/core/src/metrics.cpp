#include "birotation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "birotation/error.hpp"

namespace birot {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

}  // namespace

double RotationErrorDeg(const Rotation& estimate, const Rotation& truth) {
  // arccos((tr(M) - 1) / 2) evaluated as atan2(|vee(M)|, (tr(M) - 1) / 2),
  // which keeps full precision for tiny angles.
  const Mat3 m = truth.matrix().transpose() * estimate.matrix();
  const double c = std::clamp((m.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double s = vee(m).norm();
  return std::atan2(s, c) * kRadToDeg;
}

double TranslationErrorDeg(const Vec3& estimate, const Vec3& truth) {
  const bool est_zero = estimate.squaredNorm() == 0.0;
  const bool truth_zero = truth.squaredNorm() == 0.0;
  if (est_zero && truth_zero) return 0.0;
  if (est_zero || truth_zero) return 180.0;
  // arccos(|a . b|), folded so that opposite directions agree.
  const Vec3 a = estimate.normalized();
  const Vec3 b = truth.normalized();
  return std::atan2(a.cross(b).norm(), std::abs(a.dot(b))) * kRadToDeg;
}

std::map<double, double> Auc(std::span<const double> errors_deg,
                             std::span<const double> thresholds_deg) {
  if (errors_deg.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "AUC needs at least one error");
  }
  std::map<double, double> out;
  const double m = static_cast<double>(errors_deg.size());
  for (double psi : thresholds_deg) {
    if (!(psi > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "AUC thresholds must be positive");
    }
    // Integral of the empirical CDF over [0, psi]: each sample contributes
    // the headroom it leaves below the threshold.
    double area = 0.0;
    for (double e : errors_deg) area += std::max(0.0, psi - e);
    out[psi] = 100.0 * area / (psi * m);
  }
  return out;
}

Vec3 RotationVectorNear(const Rotation& r, const Vec3& reference) {
  const Vec3 theta = LogSO3(r);
  const double angle = theta.norm();
  if (angle < M_PI - 1e-6) return theta;
  // At the half-turn, theta and theta - 2 pi theta/|theta| are the same rotation.
  const Vec3 alt = theta - (2.0 * M_PI / angle) * theta;
  return (alt - reference).norm() < (theta - reference).norm() ? alt : theta;
}

ErrorSummary SummarizeErrors(std::span<const PoseSample> estimates,
                             std::span<const PoseSample> truths,
                             std::span<const double> thresholds_deg) {
  if (estimates.size() != truths.size() || estimates.empty()) {
    throw Error(ErrorCode::kLengthMismatch,
                "estimate and ground-truth counts differ (" +
                    std::to_string(estimates.size()) + " vs " +
                    std::to_string(truths.size()) + ")");
  }
  ErrorSummary out;
  out.rotation_only = std::all_of(truths.begin(), truths.end(), [](const PoseSample& t) {
    return t.translation.squaredNorm() == 0.0;
  });

  std::vector<double> pose_errors;
  pose_errors.reserve(estimates.size());
  for (std::size_t m = 0; m < estimates.size(); ++m) {
    const Vec3 theta_truth = LogSO3(truths[m].rotation);
    const Vec3 theta_est = RotationVectorNear(estimates[m].rotation, theta_truth);
    out.delta_theta_bar += (theta_est - theta_truth).cwiseAbs();
    out.delta_t_bar += (estimates[m].translation - truths[m].translation).cwiseAbs();

    PoseError err;
    err.rotation_deg = RotationErrorDeg(estimates[m].rotation, truths[m].rotation);
    err.translation_deg =
        TranslationErrorDeg(estimates[m].translation, truths[m].translation);
    out.per_pair.push_back(err);
    pose_errors.push_back(out.rotation_only
                              ? err.rotation_deg
                              : std::max(err.rotation_deg, err.translation_deg));
  }
  const double count = static_cast<double>(estimates.size());
  out.delta_theta_bar /= count;
  out.delta_t_bar /= count;
  out.auc = Auc(pose_errors, thresholds_deg);
  return out;
}

}  // namespace birot
