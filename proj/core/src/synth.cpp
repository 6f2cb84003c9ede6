#include "birotation/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "birotation/error.hpp"
#include "birotation/metrics.hpp"

namespace birot {

namespace {

constexpr double kDegToRad = M_PI / 180.0;
constexpr int kRedrawsPerPoint = 1000;

// Scene and noise sub-streams of a pair seed.
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kPriorStream = 2;

Rotation RandomRotation(double max_deg, Rng& rng) {
  const Vec3 axis = rng.UnitVector();
  const double angle = rng.Uniform(0.0, max_deg) * kDegToRad;
  return ExpSO3(angle * axis);
}

// Unit vector perpendicular to v (v nonzero).
Vec3 RandomPerpendicular(const Vec3& v, Rng& rng) {
  const Vec3 u = v.normalized();
  Vec3 w;
  do {
    const Vec3 r = rng.UnitVector();
    w = r - r.dot(u) * u;
  } while (w.squaredNorm() < 1e-12);
  return w.normalized();
}

struct Pose {
  Rotation r;
  Vec3 t;
};

Pose SamplePose(const PoseSampler& s, Rng& rng) {
  Pose out{Rotation::Identity(), Vec3::Zero()};
  switch (s.kind) {
    case PoseKind::kRandom:
      out.r = RandomRotation(s.max_deg, rng);
      out.t = rng.UnitVector() * rng.Uniform(s.t_min, s.t_max);
      break;
    case PoseKind::kPureRotation:
      out.r = RandomRotation(s.max_deg, rng);
      break;
    case PoseKind::kBasisAligned: {
      // p1 = p2 + s l_i  <=>  t = -s l_i.
      const double mag = rng.Uniform(s.t_min, s.t_max);
      Vec3 dir = -static_cast<double>(s.sign) * Direction(s.axis);
      if (s.perturb_deg > 0.0) {
        out.r = RandomRotation(s.perturb_deg, rng);
        const double tilt = rng.Uniform(0.0, s.perturb_deg) * kDegToRad;
        dir = ExpSO3(tilt * RandomPerpendicular(dir, rng)) * dir;
      }
      out.t = mag * dir;
      break;
    }
  }
  return out;
}

Vec2 Project(const Vec3& p, const Intrinsics& k) {
  return Vec2(k.fx * p.x() / p.z() + k.u0, k.fy * p.y() / p.z() + k.v0);
}

bool InBounds(const Vec2& px, const std::optional<ImageBounds>& b) {
  if (!b) return true;
  return px.x() >= 0.0 && px.x() <= b->width && px.y() >= 0.0 && px.y() <= b->height;
}

void RequireFinitePositive(double v, const char* name) {
  if (!std::isfinite(v) || !(v > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must be positive");
  }
}

}  // namespace

void SceneSpec::Validate() const {
  if (n_points < 8) throw Error(ErrorCode::kInvalidArgument, "n_points must be >= 8");
  if (!cube_center.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "cube center must be finite");
  }
  RequireFinitePositive(cube_half_extent, "cube half-extent");
  intrinsics.Validate();
  if (!(pose.max_deg >= 0.0 && pose.max_deg <= 180.0)) {
    throw Error(ErrorCode::kInvalidArgument, "max rotation must lie in [0, 180] degrees");
  }
  if (!(pose.perturb_deg >= 0.0 && pose.perturb_deg <= 180.0)) {
    throw Error(ErrorCode::kInvalidArgument, "perturbation must lie in [0, 180] degrees");
  }
  if (pose.sign != 1 && pose.sign != -1) {
    throw Error(ErrorCode::kInvalidArgument, "translation sign must be +1 or -1");
  }
  if (!(pose.t_min >= 0.0 && pose.t_max >= pose.t_min && std::isfinite(pose.t_max))) {
    throw Error(ErrorCode::kInvalidArgument, "translation range must satisfy 0 <= min <= max");
  }
  if (bounds) {
    RequireFinitePositive(bounds->width, "image width");
    RequireFinitePositive(bounds->height, "image height");
  }
}

void NoiseSpec::Validate() const {
  if (!(sigma_px >= 0.0) || !std::isfinite(sigma_px)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma must be finite and >= 0");
  }
  if (!(mismatch_rate >= 0.0 && mismatch_rate <= 0.3)) {
    throw Error(ErrorCode::kInvalidArgument, "mismatch rate must lie in [0, 0.3]");
  }
  if (!(outlier_sigma_px >= 0.0) || !std::isfinite(outlier_sigma_px)) {
    throw Error(ErrorCode::kInvalidArgument, "outlier sigma must be finite and >= 0");
  }
}

LabeledPair GenerateScene(const SceneSpec& spec) {
  spec.Validate();
  Rng rng(spec.seed);
  const Pose pose = SamplePose(spec.pose, rng);

  LabeledPair out;
  out.set = CorrespondenceSet(spec.intrinsics, spec.intrinsics);
  out.truth_rotation = pose.r;
  out.truth_translation = pose.t;
  const std::size_t n = static_cast<std::size_t>(spec.n_points);
  out.inlier.assign(n, 1);
  out.points.reserve(n);

  const double h = spec.cube_half_extent;
  for (std::size_t i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kRedrawsPerPoint && !placed; ++attempt) {
      const Vec3 p1 = spec.cube_center +
                      Vec3(rng.Uniform(-h, h), rng.Uniform(-h, h), rng.Uniform(-h, h));
      const Vec3 p2 = pose.r * p1 + pose.t;
      if (!(p1.z() > 1e-6 && p2.z() > 1e-6)) continue;
      const Vec2 u1 = Project(p1, spec.intrinsics);
      const Vec2 u2 = Project(p2, spec.intrinsics);
      if (!InBounds(u1, spec.bounds) || !InBounds(u2, spec.bounds)) continue;
      out.set.Add(u1, u2);
      out.points.push_back(p1);
      placed = true;
    }
    if (!placed) {
      throw Error(ErrorCode::kVisibilityExhausted,
                  "no visible point after " + std::to_string(kRedrawsPerPoint) +
                      " draws (point " + std::to_string(i) + ")");
    }
  }
  return out;
}

LabeledPair ApplyNoise(const LabeledPair& pair, const NoiseSpec& noise,
                       std::uint64_t seed) {
  noise.Validate();
  LabeledPair out = pair;
  const std::size_t n = pair.set.size();
  Rng rng(seed);

  // Full shuffle regardless of the rate: the first k indices are the
  // outliers, so outlier sets grow monotonically with the rate.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.UniformIndex(i)]);
  const auto k = static_cast<std::size_t>(
      std::ceil(noise.mismatch_rate * static_cast<double>(n) - 1e-9));
  for (std::size_t i = 0; i < std::min(k, n); ++i) out.inlier[order[i]] = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const double z[4] = {rng.Normal(), rng.Normal(), rng.Normal(), rng.Normal()};
    const double sigma = out.inlier[i] ? noise.sigma_px : noise.outlier_sigma_px;
    if (sigma == 0.0) continue;
    const Correspondence& c = pair.set[i];
    out.set.SetPixels(i, c.p1 + sigma * Vec2(z[0], z[1]), c.p2 + sigma * Vec2(z[2], z[3]));
  }
  return out;
}

PriorPose PerturbPose(const Rotation& r, const Vec3& t, double rot_deg,
                      double dir_deg, Rng& rng) {
  PriorPose out;
  out.r_init = ExpSO3(rot_deg * kDegToRad * rng.UnitVector()) * r;
  out.t_init = t;
  if (t.squaredNorm() > 0.0) {
    out.t_init = ExpSO3(dir_deg * kDegToRad * RandomPerpendicular(t, rng)) * t;
  }
  return out;
}

std::vector<double> MakeGrid(double lo, double hi, double step) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(step > 0.0) || hi < lo) {
    throw Error(ErrorCode::kInvalidArgument, "grid needs finite lo <= hi and step > 0");
  }
  // Index-based so rounding does not accumulate; the tolerance admits hi.
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo + static_cast<double>(i) * step;
  // 0 + 3 * 0.1 lands one ulp above 0.3; an endpoint on the grid is hi itself.
  if (std::abs(grid.back() - hi) <= 1e-9 * step) grid.back() = hi;
  return grid;
}

std::vector<double> DefaultGrid(SweepKind kind) {
  return kind == SweepKind::kNoise ? MakeGrid(0.0, 2.0, 0.02) : MakeGrid(0.0, 0.3, 0.01);
}

namespace {

NoiseSpec NoiseAt(const SweepOptions& options, double param) {
  NoiseSpec noise;
  noise.outlier_sigma_px = options.outlier_sigma_px;
  if (options.kind == SweepKind::kNoise) {
    noise.sigma_px = param;
  } else {
    noise.sigma_px = options.inlier_sigma_px;
    noise.mismatch_rate = param;
  }
  return noise;
}

}  // namespace

std::vector<SweepRecord> RunSweep(const SweepOptions& options, const SolverConfig& cfg) {
  cfg.Validate();
  options.scene.Validate();
  if (options.pairs_per_point < 1) {
    throw Error(ErrorCode::kInvalidArgument, "pairs per point must be >= 1");
  }
  std::vector<double> grid = options.grid.empty() ? DefaultGrid(options.kind) : options.grid;
  std::sort(grid.begin(), grid.end());
  for (double param : grid) NoiseAt(options, param).Validate();

  const std::size_t pairs = static_cast<std::size_t>(options.pairs_per_point);
  const std::size_t tasks = grid.size() * pairs;

  struct Outcome {
    bool ok = false;
    PoseError err;
  };
  std::vector<Outcome> outcomes(tasks);

  auto run_task = [&](std::size_t task) {
    const double param = grid[task / pairs];
    const std::size_t m = task % pairs;
    SceneSpec scene = options.scene;
    scene.seed = DeriveSeed(options.seed, m);

    const NoiseSpec noise = NoiseAt(options, param);

    Outcome& out = outcomes[task];
    try {
      const LabeledPair clean = GenerateScene(scene);
      const LabeledPair noisy = ApplyNoise(clean, noise, DeriveSeed(scene.seed, kNoiseStream));
      Rng prior_rng(DeriveSeed(scene.seed, kPriorStream));
      const double rot = prior_rng.Uniform(0.0, options.prior_perturb_deg);
      const double dir = prior_rng.Uniform(0.0, options.prior_perturb_deg);
      const PriorPose prior =
          PerturbPose(clean.truth_rotation, clean.truth_translation, rot, dir, prior_rng);
      const RelativePose pose = Solve(noisy.set, prior, cfg);
      // A translating pair reported as pure rotation has no direction to score.
      if (pose.IsPureRotation() && clean.truth_translation.squaredNorm() > 0.0) return;
      out.err.rotation_deg = RotationErrorDeg(pose.rotation, clean.truth_rotation);
      out.err.translation_deg = TranslationErrorDeg(pose.translation, clean.truth_translation);
      out.ok = true;
    } catch (const Error&) {
      out.ok = false;
    }
  };

  unsigned threads = options.threads > 0 ? static_cast<unsigned>(options.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, tasks));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) run_task(task);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Aggregated in index order so the sums do not depend on scheduling.
  std::vector<SweepRecord> records;
  records.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SweepRecord rec;
    rec.parameter = grid[g];
    rec.pairs = options.pairs_per_point;
    double sum_r = 0.0, sum_t = 0.0;
    int ok = 0;
    for (std::size_t m = 0; m < pairs; ++m) {
      const Outcome& o = outcomes[g * pairs + m];
      if (!o.ok) {
        ++rec.failures;
        continue;
      }
      sum_r += o.err.rotation_deg;
      sum_t += o.err.translation_deg;
      ++ok;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.mean_rotation_deg = ok > 0 ? sum_r / ok : nan;
    rec.mean_translation_deg = ok > 0 ? sum_t / ok : nan;
    records.push_back(rec);
  }
  return records;
}

}  // namespace birot
