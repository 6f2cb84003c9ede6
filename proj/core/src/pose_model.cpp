#include "birotation/pose_model.hpp"

#include <cmath>
#include <string>

#include "birotation/error.hpp"

namespace birot {

void Intrinsics::Validate() const {
  const bool finite = std::isfinite(fx) && std::isfinite(fy) &&
                      std::isfinite(u0) && std::isfinite(v0);
  if (!finite || !(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "intrinsics require finite values and fx, fy > 0");
  }
}

Vec3 Normalize(const Vec2& pixel, const Intrinsics& k) {
  return Vec3((pixel.x() - k.u0) / k.fx, (pixel.y() - k.v0) / k.fy, 1.0);
}

CorrespondenceSet::CorrespondenceSet(const Intrinsics& k1, const Intrinsics& k2)
    : k1_(k1), k2_(k2) {
  k1_.Validate();
  k2_.Validate();
}

void CorrespondenceSet::Add(const Vec2& p1, const Vec2& p2) {
  if (!p1.allFinite() || !p2.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument,
                "non-finite pixel in match " + std::to_string(items_.size()));
  }
  items_.push_back({p1, p2, Normalize(p1, k1_), Normalize(p2, k2_)});
}

void CorrespondenceSet::SetPixels(std::size_t n, const Vec2& p1,
                                  const Vec2& p2) {
  Correspondence& c = items_.at(n);
  c.p1 = p1;
  c.p2 = p2;
  c.bar1 = Normalize(p1, k1_);
  c.bar2 = Normalize(p2, k2_);
}

Axis AxisFromIndex(int i) {
  if (i < 1 || i > 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "axis index must be 1, 2 or 3, got " + std::to_string(i));
  }
  return static_cast<Axis>(i);
}

Vec3 Direction(Axis a) { return Vec3::Unit(Index(a) - 1); }

RelativePose RecoverPose(const Rotation& r1, const Rotation& r2, Axis axis,
                         int scale_sign) {
  RelativePose pose;
  pose.rotation = r2.inverse() * r1;
  pose.translation = (-static_cast<double>(scale_sign) * r2.row(Index(axis) - 1))
                         .normalized();
  pose.axis = axis;
  pose.scale_sign = scale_sign >= 0 ? 1 : -1;
  pose.r1 = r1;
  pose.r2 = r2;
  return pose;
}

Mat3 EssentialFromBirotation(const Rotation& r1, const Rotation& r2, Axis axis) {
  // R2^T [l_i]x R1 written with rows of R1 and R2.
  const auto a = [&](int row) { return r1.row(row - 1); };
  const auto b = [&](int row) { return r2.row(row - 1); };
  switch (axis) {
    case Axis::kX:
      return b(3) * a(2).transpose() - b(2) * a(3).transpose();
    case Axis::kY:
      return b(1) * a(3).transpose() - b(3) * a(1).transpose();
    case Axis::kZ:
      return b(2) * a(1).transpose() - b(1) * a(2).transpose();
  }
  return Mat3::Zero();
}

std::array<RelativePose, 4> EnumerateAmbiguity(const Rotation& r1,
                                               const Rotation& r2, Axis axis) {
  const Rotation flipped = Rotation::HalfTurn(Index(axis)) * r1;
  return {RecoverPose(r1, r2, axis, +1), RecoverPose(r1, r2, axis, -1),
          RecoverPose(flipped, r2, axis, +1), RecoverPose(flipped, r2, axis, -1)};
}

TriangulatedDepths TriangulateMidpoint(const Rotation& r, const Vec3& t,
                                       const Vec3& bar1, const Vec3& bar2,
                                       double min_ray_angle) {
  // Reference frame: ray 1 is lambda1 * bar1, ray 2 is c + lambda2 * R^T bar2.
  const Vec3 c = -(r.matrix().transpose() * t);
  const Vec3& a = bar1;
  const Vec3 b = r.matrix().transpose() * bar2;
  const double aa = a.dot(a);
  const double ab = a.dot(b);
  const double bb = b.dot(b);
  // |a x b|^2 equals aa bb - ab^2 without the cancellation for near-parallel rays.
  const double det = a.cross(b).squaredNorm();

  TriangulatedDepths out;
  const double sin2 = det / (aa * bb);
  if (!(sin2 > min_ray_angle * min_ray_angle)) return out;

  const double ac = a.dot(c);
  const double bc = b.dot(c);
  const double lambda1 = (ac * bb - ab * bc) / det;
  const double lambda2 = (ab * ac - aa * bc) / det;
  out.depth1 = lambda1 * bar1.z();
  out.depth2 = lambda2 * bar2.z();
  out.valid = true;
  return out;
}

std::size_t CountPositiveDepths(const RelativePose& pose,
                                const CorrespondenceSet& set,
                                double min_ray_angle) {
  std::size_t count = 0;
  for (const Correspondence& c : set.items()) {
    const TriangulatedDepths d = TriangulateMidpoint(
        pose.rotation, pose.translation, c.bar1, c.bar2, min_ray_angle);
    if (d.valid && d.depth1 > 0.0 && d.depth2 > 0.0) ++count;
  }
  return count;
}

double DirectionAngle(const Vec3& a, const Vec3& b) {
  if (a.squaredNorm() == 0.0 || b.squaredNorm() == 0.0) return M_PI / 2;
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

RelativePose CheiralitySelect(std::span<const RelativePose> candidates,
                              const CorrespondenceSet& set,
                              double min_ray_angle) {
  if (candidates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no pose candidates");
  }
  if (candidates.size() == 1) return candidates.front();
  if (set.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "cheirality check needs at least 2 correspondences");
  }

  std::vector<std::size_t> votes(candidates.size());
  std::size_t best = 0;
  for (std::size_t n = 0; n < candidates.size(); ++n) {
    votes[n] = CountPositiveDepths(candidates[n], set, min_ray_angle);
    if (votes[n] > votes[best]) best = n;
  }

  constexpr double kSamePose = 1e-6;
  for (std::size_t n = 0; n < candidates.size(); ++n) {
    if (n == best || votes[n] != votes[best]) continue;
    const double dr = GeodesicAngle(candidates[n].rotation, candidates[best].rotation);
    const double dt = DirectionAngle(candidates[n].translation,
                                     candidates[best].translation);
    const bool both_zero = candidates[n].IsPureRotation() &&
                           candidates[best].IsPureRotation();
    if (dr > kSamePose || (!both_zero && dt > kSamePose)) {
      throw Error(ErrorCode::kAmbiguousCheirality,
                  "candidates " + std::to_string(best) + " and " +
                      std::to_string(n) + " tie with " +
                      std::to_string(votes[best]) + " positive-depth votes");
    }
  }
  return candidates[best];
}

}  // namespace birot
