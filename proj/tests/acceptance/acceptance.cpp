// Acceptance checks. Prints one PASS/FAIL line per criterion; an optional
// argument selects a single criterion by number.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "birotation/error.hpp"
#include "birotation/metrics.hpp"
#include "birotation/pose_model.hpp"
#include "birotation/random.hpp"
#include "birotation/residuals.hpp"
#include "birotation/solver.hpp"
#include "birotation/synth.hpp"
#include "cli.hpp"
#include "scenes.hpp"

using namespace birot;
using namespace birot::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

// The default value threshold (1e-8 on d/N) still allows RMS residuals of
// 1e-4 rad, far above the 1e-4 degree targets; noise-free checks iterate to
// the round-off floor instead.
SolverConfig RoundOffConfig() {
  SolverConfig cfg;
  cfg.tol_value = 1e-20;
  return cfg;
}

LabeledPair RandomScene(std::uint64_t seed, int n, PoseKind kind, double max_deg) {
  SceneSpec spec;
  spec.n_points = n;
  spec.pose.kind = kind;
  spec.pose.max_deg = max_deg;
  spec.seed = seed;
  return GenerateScene(spec);
}

// --- 1 -----------------------------------------------------------------------
Outcome JacobianOracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(101);
  const double delta = 1e-6;
  double worst = 0.0;
  int configs = 0;
  for (Axis model : kAllAxes) {
    const ModelRows rows = RowsFor(model);
    for (int c = 0; c < 1000;) {
      const Rotation r1 = RandomRotation(rng);
      const Rotation r2 = RandomRotation(rng);
      const Vec3 b1 = RandomBearing(rng);
      const Vec3 b2 = RandomBearing(rng);
      const Vec3 p1 = r1 * b1;
      const Vec3 p2 = r2 * b2;
      // Keep away from the degeneracy floors.
      const auto den = [&](const Vec3& p) {
        return p(rows.j) * p(rows.j) + p(rows.k) * p(rows.k);
      };
      if (den(p1) < 1e-2 || den(p2) < 1e-2) continue;
      JacobianRow row;
      if (!JacobianRowAt(model, p1, p2, row)) continue;
      Eigen::Matrix<double, 6, 1> analytic, numeric;
      analytic << row.d_theta1, row.d_theta2;
      for (int d = 0; d < 6; ++d) {
        Vec3 step = Vec3::Zero();
        step(d % 3) = delta;
        const bool first = d < 3;
        const double ep = Residual(model, first ? ExpSO3(step) * r1 : r1,
                                   first ? r2 : ExpSO3(step) * r2, b1, b2);
        const double em = Residual(model, first ? ExpSO3(-step) * r1 : r1,
                                   first ? r2 : ExpSO3(-step) * r2, b1, b2);
        numeric(d) = WrapAngle(ep - em) / (2.0 * delta);
      }
      worst = std::max(worst, (analytic - numeric).norm() / numeric.norm());
      ++configs;
      ++c;
    }
  }
  const double t = Seconds(start);
  return {worst <= 1e-5 && t < 5.0,
          std::to_string(configs) + " configurations, max relative error " +
              Fmt("%.2e", worst) + ", " + Fmt("%.2f", t) + " s"};
}

// --- 2 -----------------------------------------------------------------------
Outcome ExactRecovery() {
  const auto start = std::chrono::steady_clock::now();
  const SolverConfig cfg = RoundOffConfig();
  const SolverConfig defaults;
  int ok = 0;
  int ok_defaults = 0;
  double worst_r = 0.0, worst_t = 0.0;
  for (int m = 0; m < 100; ++m) {
    const LabeledPair pair = RandomScene(DeriveSeed(202, m), 200, PoseKind::kRandom, 30.0);
    Rng rng(DeriveSeed(203, m));
    const PriorPose prior =
        PerturbPose(pair.truth_rotation, pair.truth_translation, 5.0, 5.0, rng);
    const auto within = [&](const RelativePose& pose, double& er, double& et) {
      er = RotationErrorDeg(pose.rotation, pair.truth_rotation);
      et = DirectionAngle(pose.translation, pair.truth_translation) / kDeg;
      return er <= 1e-4 && et <= 1e-4;
    };
    try {
      double er, et;
      if (within(Solve(pair.set, prior, cfg), er, et)) ++ok;
      worst_r = std::max(worst_r, er);
      worst_t = std::max(worst_t, et);
    } catch (const Error&) {
    }
    try {
      double er, et;
      if (within(Solve(pair.set, prior, defaults), er, et)) ++ok_defaults;
    } catch (const Error&) {
    }
  }
  const double t = Seconds(start);
  return {ok == 100 && t < 30.0,
          std::to_string(ok) + "/100 within 1e-4 deg (worst rotation " + Fmt("%.2e", worst_r) +
              " deg, direction " + Fmt("%.2e", worst_t) + " deg) at value threshold 1e-20; " +
              std::to_string(ok_defaults) + "/100 at the default 1e-8; " + Fmt("%.2f", t) +
              " s"};
}

// --- 3 -----------------------------------------------------------------------
Outcome PureRotation() {
  const auto start = std::chrono::steady_clock::now();
  const SolverConfig cfg = RoundOffConfig();
  const PriorPose prior;  // identity, zero translation: axis initialization
  int exact_ok = 0;
  std::vector<double> noisy_err;
  for (int m = 0; m < 100; ++m) {
    const LabeledPair clean =
        RandomScene(DeriveSeed(303, m), 200, PoseKind::kPureRotation, 10.0);
    try {
      const RelativePose pose = Solve(clean.set, prior, cfg);
      if (RotationErrorDeg(pose.rotation, clean.truth_rotation) <= 1e-3 &&
          pose.IsPureRotation()) {
        ++exact_ok;
      }
    } catch (const Error&) {
    }
    NoiseSpec noise;
    noise.sigma_px = 0.1;
    const LabeledPair noisy = ApplyNoise(clean, noise, DeriveSeed(304, m));
    double err = 180.0;  // a failed solve scores the worst error
    try {
      err = RotationErrorDeg(Solve(noisy.set, prior, cfg).rotation, clean.truth_rotation);
    } catch (const Error&) {
    }
    noisy_err.push_back(err);
  }
  const std::vector<double> psi = {5.0};
  const double auc = Auc(noisy_err, psi).at(5.0);
  const double t = Seconds(start);
  return {exact_ok >= 99 && auc >= 95.0 && t < 60.0,
          "noise-free " + std::to_string(exact_ok) + "/100; AUC@5 with 0.1 px noise " +
              Fmt("%.3f", auc) + ", " + Fmt("%.2f", t) + " s"};
}

// --- 4 -----------------------------------------------------------------------
Outcome BasisSelection() {
  const SolverConfig cfg;
  int hits = 0;
  int hits_axis_init = 0;
  for (int trial = 0; trial < 30; ++trial) {
    SceneSpec spec;
    spec.pose.kind = PoseKind::kBasisAligned;
    spec.pose.axis = kAllAxes[trial % 3];
    spec.pose.sign = trial % 2 == 0 ? 1 : -1;
    spec.seed = DeriveSeed(404, trial);
    const LabeledPair pair = GenerateScene(spec);
    try {
      const SolveReport rep = SolveDetailed(
          pair.set, PriorPose{pair.truth_rotation, pair.truth_translation}, cfg);
      if (rep.selected == spec.pose.axis) ++hits;
    } catch (const Error&) {
    }
    // Exact rotation prior without a translation prior.
    try {
      const SolveReport rep = SolveDetailed(pair.set, PriorPose{pair.truth_rotation, Vec3::Zero()}, cfg);
      if (rep.selected == spec.pose.axis) ++hits_axis_init;
    } catch (const Error&) {
    }
  }
  // Model 2 fits better by less than a factor 4.
  std::array<ModelState, 3> states;
  states[0].d_hat = 0.35;
  states[1].d_hat = 0.1;
  states[2].d_hat = 1.0;
  SolverConfig stereo;
  stereo.beta = SolverConfig::StereoBeta();
  const Axis generic_pick = SelectModel(states, cfg);
  const Axis stereo_pick = SelectModel(states, stereo);
  std::string detail = std::to_string(hits) +
                       "/30 aligned scenes select their axis from the exact pose prior (" +
                       std::to_string(hits_axis_init) +
                       "/30 from the exact rotation with axis initialization); d=(0.35,0.1,1) picks " +
                       std::to_string(Index(generic_pick)) + " with (1,1,1) and " +
                       std::to_string(Index(stereo_pick)) + " with (0.25,1,1)";
  if (hits < 30) {
    detail +=
        "; an exact pose prior puts every non-degenerate model at a zero-residual birotation, "
        "so the smallest-index tie rule decides";
  }
  return {hits == 30 && generic_pick == Axis::kY && stereo_pick == Axis::kX, detail};
}

// --- 5 -----------------------------------------------------------------------
Outcome NoiseSweepShape() {
  const auto start = std::chrono::steady_clock::now();
  SweepOptions opt;
  opt.kind = SweepKind::kNoise;
  opt.grid = MakeGrid(0.0, 2.0, 0.1);
  opt.pairs_per_point = 10;
  opt.scene.n_points = 100;
  opt.seed = 505;
  const auto records = RunSweep(opt, RoundOffConfig());
  std::vector<double> sigma, err;
  int failures = 0;
  for (const auto& r : records) {
    sigma.push_back(r.parameter);
    err.push_back(r.mean_rotation_deg);
    failures += r.failures;
  }
  const double rho = Spearman(sigma, err);
  const double at_zero = records.front().mean_rotation_deg;
  const double t = Seconds(start);
  return {rho >= 0.9 && at_zero <= 1e-4 && t < 120.0,
          std::to_string(records.size()) + " points, Spearman " + Fmt("%.4f", rho) +
              ", mean rotation error at 0 px " + Fmt("%.2e", at_zero) + " deg, " +
              std::to_string(failures) + " failed solves, " + Fmt("%.2f", t) + " s"};
}

// --- 6 -----------------------------------------------------------------------
Outcome MismatchRobustness() {
  SweepOptions opt;
  opt.kind = SweepKind::kMismatch;
  opt.grid = {0.0, 0.25};
  opt.pairs_per_point = 10;
  opt.scene.n_points = 200;
  opt.inlier_sigma_px = 0.1;
  opt.outlier_sigma_px = 10.0;
  opt.seed = 606;
  SolverConfig tukey;
  SolverConfig none;
  none.outlier_rule = OutlierRule::kNone;
  const auto a = RunSweep(opt, tukey);
  const auto b = RunSweep(opt, none);
  const double tukey_ratio = a[1].mean_rotation_deg / a[0].mean_rotation_deg;
  const double none_ratio = b[1].mean_rotation_deg / b[0].mean_rotation_deg;
  const int failures = a[0].failures + a[1].failures + b[0].failures + b[1].failures;
  return {tukey_ratio <= 5.0 && none_ratio >= 10.0 && failures == 0,
          "weighted: " + Fmt("%.3e", a[0].mean_rotation_deg) + " -> " +
              Fmt("%.3e", a[1].mean_rotation_deg) + " deg (x" + Fmt("%.2f", tukey_ratio) +
              "); unweighted: " + Fmt("%.3e", b[0].mean_rotation_deg) + " -> " +
              Fmt("%.3e", b[1].mean_rotation_deg) + " deg (x" + Fmt("%.1f", none_ratio) +
              "); " + std::to_string(failures) + " failed solves"};
}

// --- 7 -----------------------------------------------------------------------
Outcome EssentialCertificate() {
  const SolverConfig cfg = RoundOffConfig();
  double worst_epipolar = 0.0;
  double diff_negated = 0.0;   // against -[r2i]x R2^T R1
  double diff_positive = 0.0;  // against +[r2i]x R2^T R1
  double min_norm = 1e300;
  int solved = 0;
  for (int m = 0; m < 100; ++m) {
    const LabeledPair pair = RandomScene(DeriveSeed(707, m), 200, PoseKind::kRandom, 30.0);
    Rng rng(DeriveSeed(708, m));
    const PriorPose prior =
        PerturbPose(pair.truth_rotation, pair.truth_translation, 5.0, 5.0, rng);
    SolveReport rep;
    try {
      rep = SolveDetailed(pair.set, prior, cfg);
    } catch (const Error&) {
      continue;
    }
    const ModelState& st = rep.models[Index(rep.selected) - 1];
    if (!st.converged) continue;
    ++solved;
    const Mat3 e = EssentialFromBirotation(st.r1, st.r2, st.model);
    const Mat3 rel = (st.r2.inverse() * st.r1).matrix();
    const Mat3 cross = skew(st.r2.row(Index(st.model) - 1)) * rel;
    diff_negated = std::max(diff_negated, (e + cross).cwiseAbs().maxCoeff());
    diff_positive = std::max(diff_positive, (e - cross).cwiseAbs().maxCoeff());
    min_norm = std::min(min_norm, e.norm());
    for (std::size_t n = 0; n < pair.set.size(); ++n) {
      if (!st.mask[n]) continue;
      const double v = pair.set[n].bar2.dot(e * pair.set[n].bar1);
      worst_epipolar = std::max(worst_epipolar, std::abs(v));
    }
  }
  const bool epipolar_ok = solved == 100 && worst_epipolar <= 1e-8;
  const bool identity_ok = diff_negated <= 1e-10;
  std::string detail = std::to_string(solved) + "/100 converged, max |p2' E p1| " +
                       Fmt("%.2e", worst_epipolar) + "; max |E + [r2i]x R2'R1| " +
                       Fmt("%.2e", diff_negated) + " (|E|_F >= " + Fmt("%.3f", min_norm) +
                       "), max |E - [r2i]x R2'R1| " + Fmt("%.2e", diff_positive);
  if (!identity_ok && diff_positive <= 1e-10) {
    detail +=
        "; the outer-product form equals +[r2i]x R2'R1 (with skew(v) w = v x w), so the negated "
        "identity cannot hold for any nonzero E";
  }
  return {epipolar_ok && identity_ok, detail};
}

// --- 8 -----------------------------------------------------------------------
Outcome AmbiguityEnumeration() {
  SolverConfig cfg;
  cfg.tol_value = 1e-30;  // stop on the rate test, at the round-off floor
  int good = 0;
  double worst = 0.0;
  for (int m = 0; m < 50; ++m) {
    const LabeledPair pair = RandomScene(DeriveSeed(808, m), 200, PoseKind::kRandom, 30.0);
    Rng rng(DeriveSeed(809, m));
    const PriorPose prior =
        PerturbPose(pair.truth_rotation, pair.truth_translation, 5.0, 5.0, rng);
    SolveReport rep;
    try {
      rep = SolveDetailed(pair.set, prior, cfg);
    } catch (const Error&) {
      continue;
    }
    const ModelState& st = rep.models[Index(rep.selected) - 1];
    const auto candidates = EnumerateAmbiguity(st.r1, st.r2, st.model);
    int unanimous = 0;
    const RelativePose* winner = nullptr;
    for (const auto& c : candidates) {
      if (CountPositiveDepths(c, pair.set) == pair.set.size()) {
        ++unanimous;
        winner = &c;
      }
    }
    if (unanimous != 1) continue;
    const double er = RotationErrorDeg(winner->rotation, pair.truth_rotation);
    const double et = DirectionAngle(winner->translation, pair.truth_translation) / kDeg;
    worst = std::max({worst, er, et});
    if (er <= 1e-6 && et <= 1e-6) ++good;
  }
  return {good == 50, std::to_string(good) +
                          "/50 scenes with exactly one unanimous candidate matching truth "
                          "(worst angle " + Fmt("%.2e", worst) + " deg)"};
}

// --- 9 -----------------------------------------------------------------------
Outcome RedundantDof() {
  const SolverConfig cfg;
  const double gamma = 0.3;
  double worst_change = 0.0;
  int increases = 0;
  int increases_ok = 0;
  for (int m = 0; m < 20; ++m) {
    const LabeledPair pair = RandomScene(DeriveSeed(909, m), 200, PoseKind::kRandom, 30.0);
    Rng rng(DeriveSeed(910, m));
    const PriorPose prior =
        PerturbPose(pair.truth_rotation, pair.truth_translation, 5.0, 5.0, rng);
    const SolveReport rep = SolveDetailed(pair.set, prior, cfg);
    const ModelState& st = rep.models[Index(rep.selected) - 1];
    const auto base = ComputeResiduals(st.model, st.r1, st.r2, pair.set).e;
    const double reg = std::pow(LogSO3(st.r1).norm(), 2) + std::pow(LogSO3(st.r2).norm(), 2);
    const double energy = Energy(base, st.mask, st.r1, st.r2, cfg.alpha);
    for (double g : {gamma, -gamma}) {
      const Rotation spin = ExpSO3(g * Direction(st.model));
      const Rotation r1 = spin * st.r1;
      const Rotation r2 = spin * st.r2;
      const auto moved = ComputeResiduals(st.model, r1, r2, pair.set).e;
      for (std::size_t n = 0; n < moved.size(); ++n) {
        worst_change = std::max(worst_change, std::abs(WrapAngle(moved[n] - base[n])));
      }
      const double reg_moved =
          std::pow(LogSO3(r1).norm(), 2) + std::pow(LogSO3(r2).norm(), 2);
      if (reg_moved > reg) {
        ++increases;
        if (Energy(moved, st.mask, r1, r2, cfg.alpha) > energy) ++increases_ok;
      }
    }
  }
  return {worst_change <= 1e-12 && increases > 0 && increases_ok == increases,
          "max residual change " + Fmt("%.2e", worst_change) + " rad; energy rose in " +
              std::to_string(increases_ok) + "/" + std::to_string(increases) +
              " compositions that raised the regularizer"};
}

// --- 10 ----------------------------------------------------------------------
// Integral of the empirical CDF over [0, psi] by the midpoint rule on a
// 1e-6 degree grid, scaled to percent.
double NumericAuc(std::vector<double> errors, double psi) {
  std::sort(errors.begin(), errors.end());
  const double h = 1e-6;
  const auto steps = static_cast<std::size_t>(std::llround(psi / h));
  std::size_t below = 0;
  double sum = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    const double x = (static_cast<double>(s) + 0.5) * h;
    while (below < errors.size() && errors[below] <= x) ++below;
    sum += static_cast<double>(below);
  }
  return 100.0 * sum * h / (psi * static_cast<double>(errors.size()));
}

Outcome AucOracle() {
  Rng rng(1010);
  const std::vector<double> thresholds = {1.0, 3.0, 5.0, 10.0};
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    std::vector<double> errors(1 + rng.UniformIndex(40));
    for (double& e : errors) e = rng.Uniform(0.0, 12.0);
    const auto auc = Auc(errors, thresholds);
    for (double psi : thresholds) {
      worst = std::max(worst, std::abs(auc.at(psi) - NumericAuc(errors, psi)));
    }
  }
  const std::vector<double> zero = {0.0}, five = {5.0}, ten = {10.0};
  const double a0 = Auc(zero, ten).at(10.0);
  const double a5 = Auc(five, ten).at(10.0);
  return {worst <= 1e-4 && a0 == 100.0 && a5 == 50.0,
          "max deviation from numerical integration " + Fmt("%.2e", worst) +
              " points; [0] -> " + Fmt("%g", a0) + ", [5]@10 -> " + Fmt("%g", a5)};
}

// --- 11 ----------------------------------------------------------------------
struct CliRun {
  int code;
  std::string out;
};

CliRun RunCli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::Run(args, out, err);
  return {code, out.str()};
}

Outcome Determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("birot_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string corr = (dir / "pair.json").string();
  const std::string truth = (dir / "truth.json").string();

  const std::vector<std::string> synth = {"synth", "--seed", "11", "--sigma", "0.3",
                                          "--mismatch-rate", "0.1"};
  const CliRun s1 = RunCli(synth);
  const CliRun s2 = RunCli(synth);
  RunCli({"synth", "--seed", "11", "--sigma", "0.3", "--mismatch-rate", "0.1", "--out", corr,
          "--truth", truth});

  const std::vector<std::string> solve = {"solve", "--input", corr, "--prior", truth,
                                          "--seed", "3"};
  const CliRun v1 = RunCli(solve);
  const CliRun v2 = RunCli(solve);

  const std::vector<std::string> sweep = {"sweep", "--kind", "noise", "--grid", "0:1:0.25",
                                          "--pairs", "4", "--points", "50", "--seed", "5"};
  const CliRun w1 = RunCli(sweep);
  const CliRun w2 = RunCli(sweep);
  fs::remove_all(dir);

  const bool codes = s1.code == 0 && s2.code == 0 && v1.code == 0 && v2.code == 0 &&
                     w1.code == 0 && w2.code == 0;
  const bool same = s1.out == s2.out && v1.out == v2.out && w1.out == w2.out;
  return {codes && same && !s1.out.empty() && !v1.out.empty() && !w1.out.empty(),
          std::string("synth ") + (s1.out == s2.out ? "identical" : "differs") + ", solve " +
              (v1.out == v2.out ? "identical" : "differs") + ", sweep " +
              (w1.out == w2.out ? "identical" : "differs") +
              (codes ? "" : " (nonzero exit status)")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "jacobian matches finite differences", JacobianOracle},
      {2, "exact recovery on noise-free scenes", ExactRecovery},
      {3, "pure rotation", PureRotation},
      {4, "basis-model selection", BasisSelection},
      {5, "noise sweep shape", NoiseSweepShape},
      {6, "mismatch robustness", MismatchRobustness},
      {7, "essential-matrix certificate", EssentialCertificate},
      {8, "ambiguity enumeration", AmbiguityEnumeration},
      {9, "redundant rotation invariance", RedundantDof},
      {10, "AUC oracle", AucOracle},
      {11, "CLI determinism", Determinism},
  };
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
