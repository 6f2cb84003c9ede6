#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "birotation/pose_model.hpp"
#include "birotation/residuals.hpp"
#include "birotation/so3.hpp"

namespace birot {

enum class OutlierRule { kTukeyUpperFence, kNone };

struct SolverConfig {
  double alpha = 1e-3;
  std::array<double, 3> beta = {1.0, 1.0, 1.0};
  double tol_value = 1e-8;  // stop when d_hat / N falls below
  double tol_rate = 1e-6;   // stop when the relative change of d_hat falls below
  int max_iters = 200;
  OutlierRule outlier_rule = OutlierRule::kTukeyUpperFence;
  bool disambiguate = false;
  std::uint64_t seed = 0;

  /// Throws Error(kInvalidArgument) on a violated invariant.
  void Validate() const;

  /// Selection weights tuned for near-X (stereo) and near-Z (odometry) motion.
  static std::array<double, 3> GenericBeta() { return {1.0, 1.0, 1.0}; }
  static std::array<double, 3> StereoBeta() { return {0.25, 1.0, 1.0}; }
  static std::array<double, 3> OdometryBeta() { return {1.0, 1.0, 0.25}; }
};

/// Prior relative pose. A zero t_init requests per-model axis initialization.
struct PriorPose {
  Rotation r_init;
  Vec3 t_init = Vec3::Zero();
};

struct ModelState {
  Axis model = Axis::kX;
  Rotation r1;
  Rotation r2;
  double d_hat = 0.0;
  InlierMask mask;
  int iterations = 0;
  bool converged = false;
  bool init_fallback = false;  // axis fallback used instead of t_init
};

/// Initial birotation pairs: row i of R2 is -t_init/|t_init|, completed with
/// cross products; R1 = R2 R_init.
std::array<ModelState, 3> InitializeModels(const PriorPose& prior);

/// Tukey upper fence on |e| (type-7 quartiles), with a floor of
/// max(6, ceil(N/4)) kept inliers. Entries with valid[n] == 0 are excluded.
InlierMask UpperQuartileWeights(std::span<const double> e);
InlierMask UpperQuartileWeights(std::span<const double> e,
                                std::span<const std::uint8_t> valid);

using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Damped Gauss-Newton increment: solves (J^T L J + alpha I) d = -J^T L e.
/// Throws Error(kSingularSystem) if the factorization fails.
Vec6 SolveIncrement(std::span<const JacobianRow> jacobian,
                    std::span<const double> e,
                    std::span<const std::uint8_t> mask, double alpha);

/// Fills d_hat and mask from the residuals at the state's current rotations.
void RefreshMetric(ModelState& state, const CorrespondenceSet& set,
                   const SolverConfig& cfg);

/// One iteration: weights, Jacobian, increment, left-multiplicative update.
ModelState Step(const ModelState& state, const CorrespondenceSet& set,
                const SolverConfig& cfg);

/// Iterates Step until the value or rate criterion holds or max_iters is hit.
ModelState OptimizeModel(ModelState state, const CorrespondenceSet& set,
                         const SolverConfig& cfg);

/// argmin_i beta_i d_hat_i; ties go to the smallest index.
Axis SelectModel(const std::array<ModelState, 3>& states, const SolverConfig& cfg);

/// Sign of the scale factor of a converged model by majority vote over
/// inliers in front of both rotated cameras; comparisons closer than
/// min_parallax abstain. Falls back to a two-way cheirality vote, and throws
/// Error(kIndeterminateSign) when that ties too.
int DetermineSign(const ModelState& state, const CorrespondenceSet& set,
                  double min_parallax);

/// Per-correspondence sign evidence (rotated bearings p1 = R1 bar1,
/// p2 = R2 bar2): positive when the rule favours s > 0, measured as an angle
/// difference in radians. Empty when either rotated depth is not positive.
std::optional<double> SignDisparity(Axis model, const Vec3& p1, const Vec3& p2);

struct SolveReport {
  RelativePose pose;
  std::array<ModelState, 3> models;
  Axis selected = Axis::kX;
  bool pure_rotation = false;
  bool used_sign_fallback = false;
  std::vector<std::string> warnings;
};

/// Full estimate from correspondences and a prior (see SolverConfig).
SolveReport SolveDetailed(const CorrespondenceSet& set, const PriorPose& prior,
                          const SolverConfig& cfg);

RelativePose Solve(const CorrespondenceSet& set, const PriorPose& prior,
                   const SolverConfig& cfg);

}  // namespace birot
