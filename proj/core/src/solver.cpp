#include "birotation/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>

#include "birotation/error.hpp"

namespace birot {

namespace {

constexpr std::size_t kMinInliers = 6;
constexpr double kInitDegeneracy = 1e-9;
constexpr double kMinParallaxFloor = 1e-6;  // radians

std::size_t CountOnes(std::span<const std::uint8_t> mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

// Type-7 sample quantile of an ascending sequence.
double Quantile(const std::vector<double>& sorted, double p) {
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

InlierMask MaskFor(const ModelEvaluation& eval, const SolverConfig& cfg) {
  if (cfg.outlier_rule == OutlierRule::kNone) return eval.valid;
  return UpperQuartileWeights(eval.e, eval.valid);
}

struct SignDecision {
  int sign = 0;
  bool fallback = false;
};

SignDecision DecideSign(const ModelState& state, const CorrespondenceSet& set,
                        double min_parallax) {
  std::size_t positive = 0;
  std::size_t negative = 0;
  for (std::size_t n = 0; n < set.size(); ++n) {
    if (!state.mask.empty() && !state.mask[n]) continue;
    const auto d = SignDisparity(state.model, state.r1 * set[n].bar1,
                                 state.r2 * set[n].bar2);
    if (!d || std::abs(*d) <= min_parallax) continue;
    (*d > 0.0 ? positive : negative) += 1;
  }
  if (positive != negative) return {positive > negative ? 1 : -1, false};

  // Negative rotated depths or a split vote: let triangulated depths decide
  // between the two translation directions.
  const std::array<RelativePose, 2> candidates = {
      RecoverPose(state.r1, state.r2, state.model, +1),
      RecoverPose(state.r1, state.r2, state.model, -1)};
  std::array<std::size_t, 2> votes = {0, 0};
  for (std::size_t n = 0; n < set.size(); ++n) {
    if (!state.mask.empty() && !state.mask[n]) continue;
    for (std::size_t c = 0; c < 2; ++c) {
      const TriangulatedDepths d =
          TriangulateMidpoint(candidates[c].rotation, candidates[c].translation,
                              set[n].bar1, set[n].bar2, min_parallax);
      if (d.valid && d.depth1 > 0.0 && d.depth2 > 0.0) ++votes[c];
    }
  }
  if (votes[0] == votes[1]) {
    throw Error(ErrorCode::kIndeterminateSign,
                "scale sign vote tied (" + std::to_string(positive) + " vs " +
                    std::to_string(negative) + "; cheirality " +
                    std::to_string(votes[0]) + " vs " + std::to_string(votes[1]) +
                    ")");
  }
  return {votes[0] > votes[1] ? 1 : -1, true};
}

}  // namespace

void SolverConfig::Validate() const {
  const auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "solver config: " + what);
  };
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("alpha must be > 0");
  for (double b : beta) {
    if (!(b > 0.0) || !std::isfinite(b)) fail("beta components must be > 0");
  }
  if (!(tol_value > 0.0)) fail("tol_value must be > 0");
  if (!(tol_rate > 0.0)) fail("tol_rate must be > 0");
  if (max_iters < 1) fail("max_iters must be >= 1");
}

std::array<ModelState, 3> InitializeModels(const PriorPose& prior) {
  if (!prior.t_init.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "prior translation is not finite");
  }
  std::array<ModelState, 3> states;
  const double t_norm = prior.t_init.norm();

  for (Axis axis : kAllAxes) {
    ModelState& st = states[Index(axis) - 1];
    st.model = axis;

    // Row i of R2 is the negated translation direction; the cross product with
    // a fixed basis vector completes the frame.
    const int i = Index(axis) - 1;
    const int next = (i + 1) % 3;
    const int prev = (i + 2) % 3;
    const Vec3 reference = Vec3::Unit(prev);  // l3, l1, l2 for models 1, 2, 3

    Vec3 a = t_norm > 0.0 ? Vec3(-prior.t_init / t_norm) : Direction(axis);
    Vec3 c = reference.cross(a);
    if (t_norm > 0.0 && c.norm() < kInitDegeneracy) {
      st.init_fallback = true;
      a = Direction(axis);
      c = reference.cross(a);
    }
    c.normalize();

    // Rows (a, c, a x c) are placed cyclically from row i so the frame stays
    // right-handed.
    Mat3 r2;
    r2.row(i) = a.transpose();
    r2.row(next) = c.transpose();
    r2.row(prev) = a.cross(c).transpose();
    st.r2 = IsRotationMatrix(r2) ? Rotation::FromMatrix(r2) : Rotation::Nearest(r2);
    st.r1 = st.r2 * prior.r_init;
  }
  return states;
}

InlierMask UpperQuartileWeights(std::span<const double> e) {
  const std::vector<std::uint8_t> valid(e.size(), 1);
  return UpperQuartileWeights(e, valid);
}

InlierMask UpperQuartileWeights(std::span<const double> e,
                                std::span<const std::uint8_t> valid) {
  if (e.size() != valid.size()) {
    throw Error(ErrorCode::kLengthMismatch, "residual and validity lengths differ");
  }
  InlierMask mask(e.size(), 0);
  std::vector<std::size_t> idx;
  idx.reserve(e.size());
  for (std::size_t n = 0; n < e.size(); ++n) {
    if (valid[n]) idx.push_back(n);
  }
  if (idx.empty()) return mask;

  std::vector<double> mag;
  mag.reserve(idx.size());
  for (std::size_t n : idx) mag.push_back(std::abs(e[n]));
  std::vector<double> sorted = mag;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = Quantile(sorted, 0.25);
  const double q3 = Quantile(sorted, 0.75);
  const double fence = q3 + 1.5 * (q3 - q1);

  std::size_t kept = 0;
  for (std::size_t m = 0; m < idx.size(); ++m) {
    if (mag[m] <= fence) {
      mask[idx[m]] = 1;
      ++kept;
    }
  }

  const std::size_t floor = std::min(
      idx.size(), std::max<std::size_t>(kMinInliers, (idx.size() + 3) / 4));
  if (kept < floor) {
    std::vector<std::size_t> order(idx.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return mag[a] < mag[b]; });
    std::fill(mask.begin(), mask.end(), 0);
    for (std::size_t m = 0; m < floor; ++m) mask[idx[order[m]]] = 1;
  }
  return mask;
}

Vec6 SolveIncrement(std::span<const JacobianRow> jacobian,
                    std::span<const double> e,
                    std::span<const std::uint8_t> mask, double alpha) {
  if (jacobian.size() != e.size() || mask.size() != e.size()) {
    throw Error(ErrorCode::kLengthMismatch, "jacobian, residual and mask lengths differ");
  }
  Eigen::Matrix<double, 6, 6> h = alpha * Eigen::Matrix<double, 6, 6>::Identity();
  Vec6 g = Vec6::Zero();
  for (std::size_t n = 0; n < e.size(); ++n) {
    if (!mask[n]) continue;
    Vec6 j;
    j << jacobian[n].d_theta1, jacobian[n].d_theta2;
    h.selfadjointView<Eigen::Lower>().rankUpdate(j);
    g += j * e[n];
  }
  Eigen::LLT<Eigen::Matrix<double, 6, 6>, Eigen::Lower> llt(h);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularSystem, "normal equations are not positive definite");
  }
  Vec6 delta = -llt.solve(g);
  if (!delta.allFinite()) {
    throw Error(ErrorCode::kSingularSystem, "increment is not finite");
  }
  return delta;
}

void RefreshMetric(ModelState& state, const CorrespondenceSet& set,
                   const SolverConfig& cfg) {
  const ModelEvaluation eval = EvaluateModel(state.model, state.r1, state.r2, set, false);
  state.mask = MaskFor(eval, cfg);
  state.d_hat = DiscretizedMetric(eval.e, state.mask);
}

ModelState Step(const ModelState& state, const CorrespondenceSet& set,
                const SolverConfig& cfg) {
  const ModelEvaluation eval = EvaluateModel(state.model, state.r1, state.r2, set, true);
  const InlierMask mask = MaskFor(eval, cfg);
  if (CountOnes(mask) < kMinInliers) {
    throw Error(ErrorCode::kTooFewInliers,
                "model " + std::to_string(Index(state.model)) + " has " +
                    std::to_string(CountOnes(mask)) + " usable correspondences");
  }
  const Vec6 delta = SolveIncrement(eval.jacobian, eval.e, mask, cfg.alpha);

  ModelState next = state;
  next.r1 = ExpSO3(delta.head<3>()) * state.r1;
  next.r2 = ExpSO3(delta.tail<3>()) * state.r2;
  next.iterations = state.iterations + 1;
  RefreshMetric(next, set, cfg);
  return next;
}

ModelState OptimizeModel(ModelState state, const CorrespondenceSet& set,
                         const SolverConfig& cfg) {
  cfg.Validate();
  const double n_items = static_cast<double>(set.size());
  if (state.mask.size() != set.size()) RefreshMetric(state, set, cfg);
  state.converged = false;

  for (int it = 0; it < cfg.max_iters; ++it) {
    const double previous = state.d_hat;
    state = Step(state, set, cfg);
    if (state.d_hat / n_items < cfg.tol_value) {
      state.converged = true;
      break;
    }
    const double rate = std::abs(previous - state.d_hat) /
                        std::max(previous, std::numeric_limits<double>::epsilon());
    if (rate < cfg.tol_rate) {
      state.converged = true;
      break;
    }
  }
  return state;
}

Axis SelectModel(const std::array<ModelState, 3>& states, const SolverConfig& cfg) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (cfg.beta[i] * states[i].d_hat < cfg.beta[best] * states[best].d_hat) best = i;
  }
  return kAllAxes[best];
}

std::optional<double> SignDisparity(Axis model, const Vec3& p1, const Vec3& p2) {
  if (!(p1.z() > 0.0) || !(p2.z() > 0.0)) return std::nullopt;
  // Compared as angles: atan is monotone, so signs match the ratio rule, but
  // round-off stays bounded when a rotated depth is small.
  switch (model) {
    case Axis::kX: return std::atan2(p1.x(), p1.z()) - std::atan2(p2.x(), p2.z());
    case Axis::kY: return std::atan2(p1.y(), p1.z()) - std::atan2(p2.y(), p2.z());
    case Axis::kZ:
      return std::atan2(std::abs(p2.x()), p2.z()) - std::atan2(std::abs(p1.x()), p1.z());
  }
  return std::nullopt;
}

int DetermineSign(const ModelState& state, const CorrespondenceSet& set,
                  double min_parallax) {
  return DecideSign(state, set, min_parallax).sign;
}

SolveReport SolveDetailed(const CorrespondenceSet& set, const PriorPose& prior,
                          const SolverConfig& cfg) {
  cfg.Validate();
  if (set.size() < kMinInliers) {
    throw Error(ErrorCode::kTooFewInliers,
                "need at least 6 correspondences, got " + std::to_string(set.size()));
  }

  SolveReport report;
  report.models = InitializeModels(prior);
  for (ModelState& st : report.models) {
    if (st.init_fallback) {
      report.warnings.push_back("model " + std::to_string(Index(st.model)) +
                                ": prior translation parallel to the construction "
                                "axis; using axis initialization");
    }
    st = OptimizeModel(st, set, cfg);
    if (!st.converged) {
      report.warnings.push_back("model " + std::to_string(Index(st.model)) +
                                ": iteration cap reached");
    }
  }

  report.selected = SelectModel(report.models, cfg);
  const ModelState& best = report.models[Index(report.selected) - 1];
  const double n_items = static_cast<double>(set.size());
  // Parallax below the residual level reachable at the value threshold is
  // indistinguishable from zero; the floor covers round-off left in
  // converged rotations when the threshold is set very small.
  const double min_parallax = std::max(std::sqrt(cfg.tol_value), kMinParallaxFloor);

  try {
    const SignDecision sign = DecideSign(best, set, min_parallax);
    report.pose = RecoverPose(best.r1, best.r2, report.selected, sign.sign);
    report.used_sign_fallback = sign.fallback;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::kIndeterminateSign) throw;
    const bool all_small = std::all_of(
        report.models.begin(), report.models.end(),
        [&](const ModelState& st) { return st.d_hat / n_items < cfg.tol_value; });
    if (!all_small) throw;
    report.pose = RecoverPose(best.r1, best.r2, report.selected, +1);
    report.pose.translation = Vec3::Zero();
    report.pure_rotation = true;
  }

  if (cfg.disambiguate && !report.pure_rotation) {
    CorrespondenceSet inliers(set.intrinsics1(), set.intrinsics2());
    for (std::size_t n = 0; n < set.size(); ++n) {
      if (best.mask[n]) inliers.Add(set[n].p1, set[n].p2);
    }
    const auto candidates = EnumerateAmbiguity(best.r1, best.r2, report.selected);
    try {
      report.pose = CheiralitySelect(candidates, inliers, min_parallax);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kAmbiguousCheirality) throw;
      report.warnings.push_back(std::string("disambiguation skipped: ") + err.what());
    }
  }

  report.pose.metric = cfg.beta[Index(report.selected) - 1] * best.d_hat / n_items;
  return report;
}

RelativePose Solve(const CorrespondenceSet& set, const PriorPose& prior,
                   const SolverConfig& cfg) {
  return SolveDetailed(set, prior, cfg).pose;
}

}  // namespace birot
