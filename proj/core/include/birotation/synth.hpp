#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "birotation/pose_model.hpp"
#include "birotation/random.hpp"
#include "birotation/solver.hpp"
#include "birotation/so3.hpp"

namespace birot {

enum class PoseKind { kRandom, kPureRotation, kBasisAligned };

/// How the target camera pose is drawn. Rotations are exp(angle * axis) with
/// a uniform random axis and angle uniform in [0, max_deg]; translations have
/// magnitude uniform in [t_min, t_max].
struct PoseSampler {
  PoseKind kind = PoseKind::kRandom;
  double max_deg = 30.0;
  Axis axis = Axis::kX;      // kBasisAligned: t = -sign * |t| * l_axis
  int sign = 1;
  double perturb_deg = 0.0;  // kBasisAligned: bound on rotation and direction tilt
  double t_min = 0.5;
  double t_max = 2.0;
};

struct ImageBounds {
  double width = 640.0;
  double height = 640.0;
};

struct SceneSpec {
  int n_points = 200;
  Vec3 cube_center = Vec3(0.0, 0.0, 6.0);
  double cube_half_extent = 2.0;
  Intrinsics intrinsics{600.0, 600.0, 320.0, 320.0};
  PoseSampler pose;
  std::optional<ImageBounds> bounds;  // checked only when set
  std::uint64_t seed = 0;

  void Validate() const;
};

struct NoiseSpec {
  double sigma_px = 0.0;
  double mismatch_rate = 0.0;  // in [0, 0.3]
  double outlier_sigma_px = 10.0;

  void Validate() const;
};

/// Correspondences with their generating pose p2 = R p1 + t.
struct LabeledPair {
  CorrespondenceSet set;
  Rotation truth_rotation;
  Vec3 truth_translation = Vec3::Zero();
  std::vector<std::uint8_t> inlier;  // 1 = correct match
  std::vector<Vec3> points;          // reference-camera coordinates
};

/// Noise-free pair. Points failing visibility are redrawn; throws
/// Error(kVisibilityExhausted) when redraws run out.
LabeledPair GenerateScene(const SceneSpec& spec);

/// Marks ceil(rate * N) random matches as outliers and adds Gaussian pixel
/// noise to both views (sigma_px for inliers, outlier_sigma_px for outliers).
/// The draw sequence does not depend on the sigmas or the rate, so sweeps over
/// them reuse the same underlying noise.
LabeledPair ApplyNoise(const LabeledPair& pair, const NoiseSpec& noise,
                       std::uint64_t seed);

/// Tilts R by exactly rot_deg about a random axis and the direction of t by
/// exactly dir_deg about a random axis perpendicular to t.
PriorPose PerturbPose(const Rotation& r, const Vec3& t, double rot_deg,
                      double dir_deg, Rng& rng);

enum class SweepKind { kNoise, kMismatch };

struct SweepOptions {
  SweepKind kind = SweepKind::kNoise;
  std::vector<double> grid;  // empty: DefaultGrid(kind)
  int pairs_per_point = 100;
  SceneSpec scene;           // n_points, geometry, pose sampler
  double inlier_sigma_px = 0.1;   // mismatch sweeps
  double outlier_sigma_px = 10.0;
  double prior_perturb_deg = 5.0;  // prior = truth tilted by up to this angle
  int threads = 0;                 // 0: hardware concurrency
  std::uint64_t seed = 0;
};

struct SweepRecord {
  double parameter = 0.0;
  double mean_rotation_deg = 0.0;
  double mean_translation_deg = 0.0;
  int failures = 0;
  int pairs = 0;
};

/// lo, lo + step, ..., hi (hi included when it lies on the grid).
/// Throws Error(kInvalidArgument) for an empty or malformed range.
std::vector<double> MakeGrid(double lo, double hi, double step);

/// sigma 0..2 px step 0.02 (101 points) or mismatch rate 0..0.3 step 0.01 (31).
std::vector<double> DefaultGrid(SweepKind kind);

/// Runs the solver on every generated pair; records are ascending in the
/// parameter. Pair m of every grid point shares scene stream m of the seed.
std::vector<SweepRecord> RunSweep(const SweepOptions& options,
                                  const SolverConfig& cfg);

}  // namespace birot
