#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <vector>

namespace autocal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// 3D rotation stored as a unit quaternion. The quaternion is normalized on
/// every construction, and q / -q are treated as the same rotation.
class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}
  explicit Rotation(const Eigen::Quaterniond& q);
  Rotation(double w, double x, double y, double z);

  static Rotation identity() { return Rotation(); }
  static Rotation from_axis_angle(const Vec3& axis, double angle_rad);
  /// Exponential map: rotation by |v| radians about v/|v|.
  static Rotation from_rotation_vector(const Vec3& v);
  static Rotation from_matrix(const Mat3& m);

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }
  /// Log map, angle in [0, pi].
  Vec3 rotation_vector() const;
  double angle_rad() const;

  Rotation inverse() const { return Rotation(q_.conjugate()); }
  Rotation operator*(const Rotation& o) const { return Rotation(q_ * o.q_); }
  Vec3 operator*(const Vec3& v) const { return q_ * v; }

  Rotation slerp(const Rotation& to, double t) const;

 private:
  Eigen::Quaterniond q_;
};

/// Geodesic angle between two rotations, in degrees, in [0, 180].
double rotation_angle_between(const Rotation& a, const Rotation& b);

/// Chordal quaternion mean: hemisphere-align all quaternions to the first,
/// average componentwise, renormalize. Throws on an empty list.
Rotation average_rotations(const std::vector<Rotation>& rs);

struct RigidTransform {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_matrix(const Mat4& m);

  Mat4 matrix() const;
  RigidTransform inverse() const;
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
inline RigidTransform operator*(const RigidTransform& a,
                                const RigidTransform& b) {
  return compose(a, b);
}

/// Rotation + translation + uniform positive scale. The matrix embedding is
///
///     as_matrix() = [ s*R  s*t ]
///                   [ 0     1  ]
///
/// i.e. the top-right block carries s*t. scaled_translation() returns that
/// block, which is the lever arm expressed in first-sensor units; the
/// `translation` field itself is in second-sensor units.
class SimilarityTransform {
 public:
  SimilarityTransform() = default;
  SimilarityTransform(const Rotation& rotation, const Vec3& translation,
                      double scale);

  static SimilarityTransform identity() { return {}; }
  static SimilarityTransform from_matrix(const Mat4& m);
  static SimilarityTransform from_rigid(const RigidTransform& t);

  const Rotation& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  double scale() const { return scale_; }

  Vec3 scaled_translation() const { return scale_ * translation_; }

  Mat4 as_matrix() const;
  SimilarityTransform inverse() const;
  RigidTransform rigid_part() const { return {rotation_, translation_}; }

 private:
  Rotation rotation_;
  Vec3 translation_ = Vec3::Zero();
  double scale_ = 1.0;
};

SimilarityTransform compose(const SimilarityTransform& a,
                            const SimilarityTransform& b);
inline SimilarityTransform operator*(const SimilarityTransform& a,
                                     const SimilarityTransform& b) {
  return compose(a, b);
}

/// X^-1 * A * X for a similarity X and rigid A. The result is rigid: the
/// conjugation cancels the scale blocks and divides A's translation by the
/// scale of X.
RigidTransform conjugate_pose(const SimilarityTransform& x,
                              const RigidTransform& a);

/// One timestamped sample from a sensor's pose stream.
struct Pose {
  double timestamp = 0.0;
  RigidTransform transform;
};

/// Throws std::invalid_argument on a non-finite or negative timestamp.
void validate_pose(const Pose& p);

}  // namespace autocal
