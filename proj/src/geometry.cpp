#include "autocal/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace autocal {

Rotation::Rotation(const Eigen::Quaterniond& q) : q_(q.normalized()) {}

Rotation::Rotation(double w, double x, double y, double z)
    : q_(Eigen::Quaterniond(w, x, y, z).normalized()) {}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (n == 0.0) return Rotation();
  return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis / n)));
}

Rotation Rotation::from_rotation_vector(const Vec3& v) {
  const double angle = v.norm();
  if (angle < 1e-12) {
    // First-order expansion keeps the map smooth through zero.
    return Rotation(Eigen::Quaterniond(1.0, 0.5 * v.x(), 0.5 * v.y(),
                                       0.5 * v.z()));
  }
  return from_axis_angle(v, angle);
}

Rotation Rotation::from_matrix(const Mat3& m) {
  return Rotation(Eigen::Quaterniond(m));
}

Vec3 Rotation::rotation_vector() const {
  // Work on the w >= 0 hemisphere so the angle lands in [0, pi].
  Eigen::Quaterniond q = q_;
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double vn = q.vec().norm();
  if (vn < 1e-12) return 2.0 * q.vec();
  const double angle = 2.0 * std::atan2(vn, q.w());
  return (angle / vn) * q.vec();
}

double Rotation::angle_rad() const { return rotation_vector().norm(); }

Rotation Rotation::slerp(const Rotation& to, double t) const {
  return Rotation(q_.slerp(t, to.q_));
}

double rotation_angle_between(const Rotation& a, const Rotation& b) {
  // atan2 form: well conditioned near 0 and 180 degrees, unlike acos of the
  // quaternion dot product. |w| folds the double cover.
  const Eigen::Quaterniond d = a.quaternion().conjugate() * b.quaternion();
  return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w())) * 180.0 / M_PI;
}

Rotation average_rotations(const std::vector<Rotation>& rs) {
  if (rs.empty()) throw std::invalid_argument("no rotations");
  Eigen::Vector4d sum = Eigen::Vector4d::Zero();
  const Eigen::Quaterniond& ref = rs.front().quaternion();
  for (const Rotation& r : rs) {
    Eigen::Vector4d c = r.quaternion().coeffs();
    if (c.dot(ref.coeffs()) < 0.0) c = -c;
    sum += c;
  }
  Eigen::Quaterniond mean;
  mean.coeffs() = sum;
  return Rotation(mean);  // constructor normalizes
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidTransform RigidTransform::from_matrix(const Mat4& m) {
  return {Rotation::from_matrix(m.topLeftCorner<3, 3>()),
          m.topRightCorner<3, 1>()};
}

RigidTransform RigidTransform::inverse() const {
  Rotation rinv = rotation.inverse();
  return {rinv, -(rinv * translation)};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

SimilarityTransform::SimilarityTransform(const Rotation& rotation,
                                         const Vec3& translation, double scale)
    : rotation_(rotation), translation_(translation), scale_(scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("similarity scale must be positive");
}

SimilarityTransform SimilarityTransform::from_rigid(const RigidTransform& t) {
  return SimilarityTransform(t.rotation, t.translation, 1.0);
}

Mat4 SimilarityTransform::as_matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = scale_ * rotation_.matrix();
  m.topRightCorner<3, 1>() = scale_ * translation_;
  return m;
}

SimilarityTransform SimilarityTransform::from_matrix(const Mat4& m) {
  if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).norm() > 1e-9)
    throw std::invalid_argument("not a similarity matrix: bad bottom row");
  const double det = m.topLeftCorner<3, 3>().determinant();
  if (!(det > 0.0))
    throw std::invalid_argument("not a similarity matrix: non-positive scale");
  const double s = std::cbrt(det);
  Mat3 r = m.topLeftCorner<3, 3>() / s;
  return SimilarityTransform(Rotation::from_matrix(r),
                             m.topRightCorner<3, 1>() / s, s);
}

SimilarityTransform SimilarityTransform::inverse() const {
  Rotation rinv = rotation_.inverse();
  return SimilarityTransform(rinv, -scale_ * (rinv * translation_),
                             1.0 / scale_);
}

SimilarityTransform compose(const SimilarityTransform& a,
                            const SimilarityTransform& b) {
  // Product of the matrix embeddings, re-extracted into fields:
  // scale multiplies, and the b-side translation enters rotated while the
  // a-side one carries a 1/s_b factor from the embedding.
  return SimilarityTransform(
      a.rotation() * b.rotation(),
      a.rotation() * b.translation() + a.translation() / b.scale(),
      a.scale() * b.scale());
}

RigidTransform conjugate_pose(const SimilarityTransform& x,
                              const RigidTransform& a) {
  const Rotation rx_inv = x.rotation().inverse();
  const Vec3 t =
      rx_inv * (a.rotation * x.translation() + a.translation / x.scale() -
                x.translation());
  return {rx_inv * a.rotation * x.rotation(), t};
}

void validate_pose(const Pose& p) {
  if (!std::isfinite(p.timestamp) || p.timestamp < 0.0)
    throw std::invalid_argument("pose timestamp must be finite and >= 0");
  if (!p.transform.translation.allFinite() ||
      !p.transform.rotation.quaternion().coeffs().allFinite())
    throw std::invalid_argument("pose transform has non-finite values");
}

}  // namespace autocal
