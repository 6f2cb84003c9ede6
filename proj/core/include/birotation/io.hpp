#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "birotation/metrics.hpp"
#include "birotation/pose_model.hpp"
#include "birotation/so3.hpp"
#include "birotation/synth.hpp"

namespace birot {

// Text formats. Every floating value is written with 17 significant digits,
// so write-then-read reproduces doubles exactly. Parse failures throw
// Error(kInput) naming the line or the offending field.

/// "%.17g" rendering ("nan", "inf", "-inf" for non-finite).
std::string FormatDouble(double v);

// Correspondences: {"intrinsics1": {...}, "intrinsics2": {...},
//                   "matches": [[u1, v1, u2, v2], ...]}
std::string FormatCorrespondences(const CorrespondenceSet& set);
CorrespondenceSet ParseCorrespondences(std::string_view text);

struct PoseFile {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();
  std::optional<int> axis;
  std::optional<double> metric;
  std::optional<bool> converged;
  std::optional<std::string> initialization;  // "prior" or "axis-fallback"
  std::optional<std::array<double, 3>> beta;
};

PoseFile PoseFileFrom(const RelativePose& pose);

std::string FormatPose(const PoseFile& pose);

/// Rotation entries within 1e-6 of SO(3) are accepted, up to 1e-3 they are
/// projected back with a message appended to `warnings`, beyond that rejected.
PoseFile ParsePose(std::string_view text, std::vector<std::string>* warnings = nullptr);

inline constexpr const char* kSweepHeader =
    "param,mean_rot_err_deg,mean_trans_err_deg,failures,pairs";

std::string FormatSweepReport(std::span<const SweepRecord> records);
std::vector<SweepRecord> ParseSweepReport(std::string_view text);

/// Fixed-order JSON record of an evaluation.
std::string FormatMetricsReport(const ErrorSummary& summary);

std::string ReadTextFile(const std::string& path);

/// Writes to a sibling temporary file, then renames it over `path`.
void WriteTextFileAtomic(const std::string& path, std::string_view content);

}  // namespace birot
