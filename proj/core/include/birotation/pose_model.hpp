#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "birotation/so3.hpp"

namespace birot {

/// Pinhole intrinsics without skew or distortion.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;

  /// Throws Error(kInvalidArgument) unless fx, fy > 0 and all finite.
  void Validate() const;
};

/// Depth-normalized coordinates K^-1 (u, v, 1)^T; third component is exactly 1.
Vec3 Normalize(const Vec2& pixel, const Intrinsics& k);

struct Correspondence {
  Vec2 p1;
  Vec2 p2;
  Vec3 bar1;
  Vec3 bar2;
};

/// Matches between a reference and a target view, stored with their bearings.
class CorrespondenceSet {
 public:
  CorrespondenceSet() = default;
  CorrespondenceSet(const Intrinsics& k1, const Intrinsics& k2);

  /// Appends a pixel match; bearings are derived from the intrinsics.
  void Add(const Vec2& p1, const Vec2& p2);

  /// Replaces the pixels of item n and re-derives its bearings.
  void SetPixels(std::size_t n, const Vec2& p1, const Vec2& p2);

  const Intrinsics& intrinsics1() const { return k1_; }
  const Intrinsics& intrinsics2() const { return k2_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Correspondence& operator[](std::size_t n) const { return items_[n]; }
  std::span<const Correspondence> items() const { return items_; }

 private:
  Intrinsics k1_;
  Intrinsics k2_;
  std::vector<Correspondence> items_;
};

/// Basis translation axis; the integer value is the model index i.
enum class Axis : int { kX = 1, kY = 2, kZ = 3 };

inline constexpr std::array<Axis, 3> kAllAxes = {Axis::kX, Axis::kY, Axis::kZ};

constexpr int Index(Axis a) { return static_cast<int>(a); }

/// Throws Error(kInvalidArgument) outside {1, 2, 3}.
Axis AxisFromIndex(int i);

/// Unit vector l_i.
Vec3 Direction(Axis a);

/// A relative pose p2 = R p1 + t recovered from a birotation pair (R1, R2).
struct RelativePose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();  // unit direction, or zero for pure rotation
  Axis axis = Axis::kX;
  int scale_sign = 1;
  double metric = 0.0;
  Rotation r1;
  Rotation r2;

  bool IsPureRotation() const { return translation.squaredNorm() == 0.0; }
};

/// R = R2^T R1 and t = -sign * (row i of R2).
RelativePose RecoverPose(const Rotation& r1, const Rotation& r2, Axis axis,
                         int scale_sign);

/// Outer-product form of the essential matrix of the birotation solution;
/// equals [r_{2,i}]x R2^T R1.
Mat3 EssentialFromBirotation(const Rotation& r1, const Rotation& r2, Axis axis);

/// The four poses sharing the same basis-model constraint:
/// {R2^T R1, R2^T H_i R1} x {t = -r_{2,i}, t = +r_{2,i}}, H_i the half-turn about
/// axis i. Order: (R, -), (R, +), (H, -), (H, +).
std::array<RelativePose, 4> EnumerateAmbiguity(const Rotation& r1,
                                               const Rotation& r2, Axis axis);

struct TriangulatedDepths {
  double depth1 = 0.0;
  double depth2 = 0.0;
  bool valid = false;  // false when the rays are (nearly) parallel
};

/// Midpoint triangulation of bearings under p2 = R p1 + t. Rays separated by
/// less than min_ray_angle radians are reported invalid.
TriangulatedDepths TriangulateMidpoint(const Rotation& r, const Vec3& t,
                                       const Vec3& bar1, const Vec3& bar2,
                                       double min_ray_angle = 1e-6);

/// Number of correspondences triangulated with both depths positive.
std::size_t CountPositiveDepths(const RelativePose& pose,
                                const CorrespondenceSet& set,
                                double min_ray_angle = 1e-6);

/// Picks the candidate with the most positive-depth votes (lowest index wins
/// ties between identical poses). Throws Error(kAmbiguousCheirality) when two
/// distinct poses share the maximal count.
RelativePose CheiralitySelect(std::span<const RelativePose> candidates,
                              const CorrespondenceSet& set,
                              double min_ray_angle = 1e-6);

/// Angle in radians between two directions (not folded); pi/2 if either is zero.
double DirectionAngle(const Vec3& a, const Vec3& b);

}  // namespace birot
