#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "birotation/error.hpp"
#include "birotation/io.hpp"
#include "birotation/metrics.hpp"
#include "birotation/random.hpp"
#include "birotation/solver.hpp"
#include "birotation/synth.hpp"

namespace birot::cli {

namespace {

// Noise stream of a synth seed; matches the per-pair rule of sweeps.
constexpr std::uint64_t kNoiseStream = 1;

[[noreturn]] void BadInput(const std::string& msg) { throw Error(ErrorCode::kInput, msg); }

std::vector<double> ParseList(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
      out.push_back(v);
    } catch (const std::exception&) {
      BadInput(flag + ": '" + cell + "' is not a number");
    }
  }
  if (out.empty()) BadInput(flag + ": empty list");
  return out;
}

struct SolverFlags {
  double alpha = 1e-3;
  std::string beta;
  std::string preset = "generic";
  double tol_value = 1e-8;
  double tol_rate = 1e-6;
  int max_iters = 200;
  std::string outlier_rule = "tukey";
  bool disambiguate = false;
  std::uint64_t seed = 0;
};

void AddSolverFlags(CLI::App* app, SolverFlags& f) {
  app->add_option("--alpha", f.alpha, "Damping / regularization weight")->capture_default_str();
  auto* beta = app->add_option("--beta", f.beta, "Model selection weights b1,b2,b3");
  app->add_option("--preset", f.preset, "Selection weights: generic (1,1,1), stereo (0.25,1,1), odometry (1,1,0.25)")
      ->check(CLI::IsMember({"generic", "stereo", "odometry"}))
      ->excludes(beta)
      ->capture_default_str();
  app->add_option("--tol-value", f.tol_value, "Stop when d/N falls below")->capture_default_str();
  app->add_option("--tol-rate", f.tol_rate, "Stop when the relative change of d falls below")
      ->capture_default_str();
  app->add_option("--max-iters", f.max_iters, "Iteration cap per model")->capture_default_str();
  app->add_option("--outlier-rule", f.outlier_rule, "Residual weighting: tukey or none")
      ->check(CLI::IsMember({"tukey", "none"}))
      ->capture_default_str();
  app->add_flag("--disambiguate", f.disambiguate, "Resolve the fourfold ambiguity by cheirality");
  app->add_option("--seed", f.seed, "Seed")->capture_default_str();
}

SolverConfig MakeConfig(const SolverFlags& f) {
  SolverConfig cfg;
  cfg.alpha = f.alpha;
  if (!f.beta.empty()) {
    const auto b = ParseList(f.beta, "--beta");
    if (b.size() != 3) BadInput("--beta: expected three values b1,b2,b3");
    cfg.beta = {b[0], b[1], b[2]};
  } else if (f.preset == "stereo") {
    cfg.beta = SolverConfig::StereoBeta();
  } else if (f.preset == "odometry") {
    cfg.beta = SolverConfig::OdometryBeta();
  } else {
    cfg.beta = SolverConfig::GenericBeta();
  }
  cfg.tol_value = f.tol_value;
  cfg.tol_rate = f.tol_rate;
  cfg.max_iters = f.max_iters;
  cfg.outlier_rule = f.outlier_rule == "none" ? OutlierRule::kNone : OutlierRule::kTukeyUpperFence;
  cfg.disambiguate = f.disambiguate;
  cfg.seed = f.seed;
  try {
    cfg.Validate();
  } catch (const Error& e) {
    BadInput(e.what());
  }
  return cfg;
}

void Emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    WriteTextFileAtomic(path, text);
  }
}

// Input-side failures map to 1, numerical ones to 2.
int ExitCodeFor(const Error& e) { return e.IsNumerical() ? kExitSolver : kExitInput; }

// --- solve -----------------------------------------------------------------

struct SolveFlags {
  std::string input;
  std::string prior;
  std::string out;
  SolverFlags solver;
};

int RunSolve(const SolveFlags& f, std::ostream& out, std::ostream& err) {
  const SolverConfig cfg = MakeConfig(f.solver);
  err << "beta = (" << FormatDouble(cfg.beta[0]) << ", " << FormatDouble(cfg.beta[1]) << ", "
      << FormatDouble(cfg.beta[2]) << ")\n";

  const CorrespondenceSet set = ParseCorrespondences(ReadTextFile(f.input));
  PriorPose prior;
  if (!f.prior.empty()) {
    std::vector<std::string> warnings;
    const PoseFile p = ParsePose(ReadTextFile(f.prior), &warnings);
    for (const auto& w : warnings) err << "warning: " << f.prior << ": " << w << "\n";
    prior.r_init = p.rotation;
    prior.t_init = p.translation;
  }

  const SolveReport report = SolveDetailed(set, prior, cfg);
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  const ModelState& chosen = report.models[static_cast<std::size_t>(Index(report.selected) - 1)];
  if (report.pure_rotation) err << "pure rotation detected; translation set to zero\n";

  PoseFile pose = PoseFileFrom(report.pose);
  pose.converged = chosen.converged;
  pose.initialization = f.prior.empty() || chosen.init_fallback ? "axis-fallback" : "prior";
  pose.beta = cfg.beta;
  Emit(f.out, FormatPose(pose), out);
  return kExitOk;
}

// --- synth -----------------------------------------------------------------

struct SynthFlags {
  int n_points = 200;
  std::string pose = "random";
  double max_deg = 30.0;
  int axis = 1;
  int sign = 1;
  double perturb_deg = 0.0;
  double t_min = 0.5;
  double t_max = 2.0;
  std::string cube_center = "0,0,6";
  double half_extent = 2.0;
  double fx = 600.0, fy = 600.0, u0 = 320.0, v0 = 320.0;
  double width = 0.0, height = 0.0;
  double sigma = 0.0;
  double mismatch_rate = 0.0;
  double outlier_sigma = 10.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string truth;
};

std::string DefaultTruthPath(const std::string& out) {
  std::filesystem::path p(out);
  if (p.extension() == ".json") p.replace_extension();
  return p.string() + ".truth.json";
}

int RunSynth(const SynthFlags& f, std::ostream& out, std::ostream& err) {
  SceneSpec spec;
  spec.n_points = f.n_points;
  const auto c = ParseList(f.cube_center, "--cube-center");
  if (c.size() != 3) BadInput("--cube-center: expected x,y,z");
  spec.cube_center = Vec3(c[0], c[1], c[2]);
  spec.cube_half_extent = f.half_extent;
  spec.intrinsics = Intrinsics{f.fx, f.fy, f.u0, f.v0};
  if (f.width > 0.0 || f.height > 0.0) spec.bounds = ImageBounds{f.width, f.height};
  spec.pose.kind = f.pose == "pure-rotation"   ? PoseKind::kPureRotation
                   : f.pose == "basis-aligned" ? PoseKind::kBasisAligned
                                               : PoseKind::kRandom;
  spec.pose.max_deg = f.max_deg;
  if (f.axis < 1 || f.axis > 3) BadInput("--axis: expected 1, 2 or 3");
  spec.pose.axis = AxisFromIndex(f.axis);
  spec.pose.sign = f.sign;
  spec.pose.perturb_deg = f.perturb_deg;
  spec.pose.t_min = f.t_min;
  spec.pose.t_max = f.t_max;
  spec.seed = f.seed;

  NoiseSpec noise;
  noise.sigma_px = f.sigma;
  noise.mismatch_rate = f.mismatch_rate;
  noise.outlier_sigma_px = f.outlier_sigma;
  try {
    spec.Validate();
    noise.Validate();
  } catch (const Error& e) {
    BadInput(e.what());
  }

  const LabeledPair clean = GenerateScene(spec);
  const LabeledPair noisy = ApplyNoise(clean, noise, DeriveSeed(f.seed, kNoiseStream));

  PoseFile truth;
  truth.rotation = clean.truth_rotation;
  // Directions only: the scale of t is not observable from correspondences.
  const double norm = clean.truth_translation.norm();
  truth.translation = norm > 0.0 ? Vec3(clean.truth_translation / norm) : Vec3::Zero();

  const std::size_t outliers =
      static_cast<std::size_t>(std::count(noisy.inlier.begin(), noisy.inlier.end(), 0));
  err << "generated " << noisy.set.size() << " matches (" << outliers << " outliers)\n";

  Emit(f.out, FormatCorrespondences(noisy.set), out);
  const std::string truth_path = !f.truth.empty() ? f.truth
                                 : f.out.empty()  ? std::string()
                                                  : DefaultTruthPath(f.out);
  if (!truth_path.empty()) WriteTextFileAtomic(truth_path, FormatPose(truth));
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

struct EvalFlags {
  std::vector<std::string> est;
  std::vector<std::string> truth;
  std::string thresholds = "1,3,5,10";
  std::string out;
};

// Directories expand to their *.json files in name order.
std::vector<std::string> ExpandPaths(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) {
    std::error_code ec;
    if (std::filesystem::is_directory(p, ec)) {
      std::vector<std::string> files;
      for (const auto& entry : std::filesystem::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
          files.push_back(entry.path().string());
        }
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

std::vector<PoseSample> LoadPoses(const std::vector<std::string>& paths, std::ostream& err) {
  std::vector<PoseSample> out;
  for (const auto& path : ExpandPaths(paths)) {
    std::vector<std::string> warnings;
    const PoseFile p = ParsePose(ReadTextFile(path), &warnings);
    for (const auto& w : warnings) err << "warning: " << path << ": " << w << "\n";
    out.push_back({p.rotation, p.translation});
  }
  return out;
}

int RunEval(const EvalFlags& f, std::ostream& out, std::ostream& err) {
  const auto thresholds = ParseList(f.thresholds, "--thresholds");
  const auto est = LoadPoses(f.est, err);
  const auto truth = LoadPoses(f.truth, err);
  if (est.size() != truth.size()) {
    BadInput("estimate and ground-truth counts differ (" + std::to_string(est.size()) + " vs " +
             std::to_string(truth.size()) + ")");
  }
  ErrorSummary summary;
  try {
    summary = SummarizeErrors(est, truth, thresholds);
  } catch (const Error& e) {
    BadInput(e.what());
  }
  Emit(f.out, FormatMetricsReport(summary), out);
  return kExitOk;
}

// --- sweep -----------------------------------------------------------------

struct SweepFlags {
  std::string kind;
  std::string grid;  // lo:hi:step or comma list
  int pairs = 100;
  int points = 200;
  double max_deg = 30.0;
  double inlier_sigma = 0.1;
  double outlier_sigma = 10.0;
  double prior_perturb_deg = 5.0;
  int threads = 0;
  std::string out;
  SolverFlags solver;
};

std::vector<double> ParseGrid(const std::string& text) {
  if (text.find(':') == std::string::npos) return ParseList(text, "--grid");
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ':')) {
    const auto v = ParseList(cell, "--grid");
    if (v.size() != 1) BadInput("--grid: expected lo:hi:step");
    parts.push_back(v[0]);
  }
  if (parts.size() != 3) BadInput("--grid: expected lo:hi:step");
  try {
    return MakeGrid(parts[0], parts[1], parts[2]);
  } catch (const Error& e) {
    BadInput(std::string("--grid: ") + e.what());
  }
}

int RunSweepCommand(const SweepFlags& f, std::ostream& out, std::ostream& err) {
  const SolverConfig cfg = MakeConfig(f.solver);
  SweepOptions opt;
  opt.kind = f.kind == "mismatch" ? SweepKind::kMismatch : SweepKind::kNoise;
  if (!f.grid.empty()) opt.grid = ParseGrid(f.grid);
  for (double g : opt.grid) {
    if (opt.kind == SweepKind::kNoise && !(g >= 0.0)) BadInput("--grid: sigma must be >= 0");
    if (opt.kind == SweepKind::kMismatch && !(g >= 0.0 && g <= 0.3)) {
      BadInput("--grid: mismatch rate must lie in [0, 0.3]");
    }
  }
  if (f.pairs < 1) BadInput("--pairs must be >= 1");
  opt.pairs_per_point = f.pairs;
  opt.scene.n_points = f.points;
  opt.scene.pose.max_deg = f.max_deg;
  opt.inlier_sigma_px = f.inlier_sigma;
  opt.outlier_sigma_px = f.outlier_sigma;
  opt.prior_perturb_deg = f.prior_perturb_deg;
  opt.threads = f.threads;
  opt.seed = f.solver.seed;
  try {
    opt.scene.Validate();
  } catch (const Error& e) {
    BadInput(e.what());
  }

  const auto records = RunSweep(opt, cfg);
  int failures = 0;
  for (const auto& r : records) failures += r.failures;
  err << "sweep: " << records.size() << " points, " << failures << " failed solves\n";
  Emit(f.out, FormatSweepReport(records), out);
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relative pose estimation by birotation"};
  app.name("birot");
  app.require_subcommand(1);

  SolveFlags solve;
  auto* solve_cmd = app.add_subcommand("solve", "Estimate the relative pose of a correspondence file");
  solve_cmd->add_option("--input", solve.input, "Correspondence file")->required();
  solve_cmd->add_option("--prior", solve.prior, "Prior pose file (default: axis initialization)");
  solve_cmd->add_option("--out", solve.out, "Pose file to write (default: stdout)");
  AddSolverFlags(solve_cmd, solve.solver);

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic correspondence file");
  synth_cmd->add_option("--n-points", synth.n_points, "Number of matches")->capture_default_str();
  synth_cmd->add_option("--pose", synth.pose, "random, pure-rotation or basis-aligned")
      ->check(CLI::IsMember({"random", "pure-rotation", "basis-aligned"}))
      ->capture_default_str();
  synth_cmd->add_option("--max-deg", synth.max_deg, "Largest rotation angle")->capture_default_str();
  synth_cmd->add_option("--axis", synth.axis, "basis-aligned: translation axis 1..3")->capture_default_str();
  synth_cmd->add_option("--sign", synth.sign, "basis-aligned: scale sign +1 or -1")->capture_default_str();
  synth_cmd->add_option("--perturb-deg", synth.perturb_deg, "basis-aligned: tilt bound")->capture_default_str();
  synth_cmd->add_option("--t-min", synth.t_min, "Smallest translation magnitude")->capture_default_str();
  synth_cmd->add_option("--t-max", synth.t_max, "Largest translation magnitude")->capture_default_str();
  synth_cmd->add_option("--cube-center", synth.cube_center, "Point cube center x,y,z")->capture_default_str();
  synth_cmd->add_option("--cube-half-extent", synth.half_extent, "Point cube half-extent")->capture_default_str();
  synth_cmd->add_option("--fx", synth.fx)->capture_default_str();
  synth_cmd->add_option("--fy", synth.fy)->capture_default_str();
  synth_cmd->add_option("--u0", synth.u0)->capture_default_str();
  synth_cmd->add_option("--v0", synth.v0)->capture_default_str();
  synth_cmd->add_option("--width", synth.width, "Image width; with --height enables bounds checks");
  synth_cmd->add_option("--height", synth.height, "Image height");
  synth_cmd->add_option("--sigma", synth.sigma, "Pixel noise on correct matches")->capture_default_str();
  synth_cmd->add_option("--mismatch-rate", synth.mismatch_rate, "Fraction of wrong matches")->capture_default_str();
  synth_cmd->add_option("--outlier-sigma", synth.outlier_sigma, "Pixel noise on wrong matches")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Correspondence file (default: stdout)");
  synth_cmd->add_option("--truth", synth.truth, "Ground-truth pose file (default: next to --out)");

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compare estimated poses to ground truth");
  eval_cmd->add_option("--est", eval.est, "Estimated pose files or directories")->required();
  eval_cmd->add_option("--truth", eval.truth, "Ground-truth pose files or directories")->required();
  eval_cmd->add_option("--thresholds", eval.thresholds, "AUC thresholds in degrees")->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Report file (default: stdout)");

  SweepFlags sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Synthetic noise or mismatch sweep");
  sweep_cmd->add_option("--kind", sweep.kind, "noise or mismatch")
      ->required()
      ->check(CLI::IsMember({"noise", "mismatch"}));
  sweep_cmd->add_option("--grid", sweep.grid, "lo:hi:step or v1,v2,... (default: full grid)");
  sweep_cmd->add_option("--pairs", sweep.pairs, "Pairs per grid point")->capture_default_str();
  sweep_cmd->add_option("--points", sweep.points, "Points per pair")->capture_default_str();
  sweep_cmd->add_option("--max-deg", sweep.max_deg, "Largest rotation angle")->capture_default_str();
  sweep_cmd->add_option("--inlier-sigma", sweep.inlier_sigma, "mismatch: noise on correct matches")
      ->capture_default_str();
  sweep_cmd->add_option("--outlier-sigma", sweep.outlier_sigma, "Noise on wrong matches")->capture_default_str();
  sweep_cmd->add_option("--prior-perturb-deg", sweep.prior_perturb_deg, "Prior tilt bound")
      ->capture_default_str();
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads (0: all cores)")->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out, "Report file (default: stdout)");
  AddSolverFlags(sweep_cmd, sweep.solver);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);  // --help and friends
      return kExitOk;
    }
    // Usage of the subcommand that failed, or of the whole tool.
    const CLI::App* failed = &app;
    for (const CLI::App* cmd : {solve_cmd, synth_cmd, eval_cmd, sweep_cmd}) {
      if (*cmd) failed = cmd;
    }
    err << "error: " << e.what() << "\n\n" << failed->help();
    return kExitInput;
  }

  try {
    if (*solve_cmd) return RunSolve(solve, out, err);
    if (*synth_cmd) return RunSynth(synth, out, err);
    if (*eval_cmd) return RunEval(eval, out, err);
    return RunSweepCommand(sweep, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace birot::cli
