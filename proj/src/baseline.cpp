#include "autocal/baseline.hpp"

#include <cmath>
#include <stdexcept>

namespace autocal {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Screw convention: the real part lives on the w >= 0 hemisphere so that
// paired A/B motions use consistent signs.
DualQuaternion screw_of(const RigidTransform& t) {
  DualQuaternion dq = DualQuaternion::from_rigid(t);
  if (dq.real.w() < 0.0) {
    dq.real.coeffs() = -dq.real.coeffs();
    dq.dual.coeffs() = -dq.dual.coeffs();
  }
  return dq;
}

}  // namespace

DualQuaternion DualQuaternion::from_rigid(const RigidTransform& t) {
  DualQuaternion dq;
  dq.real = t.rotation.quaternion();
  const Eigen::Quaterniond tq(0.0, t.translation.x(), t.translation.y(),
                              t.translation.z());
  Eigen::Quaterniond d = tq * dq.real;
  d.coeffs() *= 0.5;
  dq.dual = d;
  return dq;
}

RigidTransform DualQuaternion::to_rigid() const {
  const Eigen::Quaterniond tq = dual * real.conjugate();
  return {Rotation(real), 2.0 * tq.vec()};
}

RigidTransform solve_dual_quaternion(const SyncedPair& pair) {
  if (pair.set_a.size() != pair.set_b.size())
    throw std::invalid_argument("pose set length mismatch");
  const std::size_t n = pair.size();
  if (n < 3)
    throw std::runtime_error("degenerate motion for closed form");

  // One 6x8 block per consecutive relative motion.
  const std::size_t motions = n - 1;
  Eigen::MatrixXd constraint(6 * motions, 8);
  constraint.setZero();
  for (std::size_t k = 0; k < motions; ++k) {
    const RigidTransform da =
        pair.set_a.poses[k].inverse() * pair.set_a.poses[k + 1];
    const RigidTransform db =
        pair.set_b.poses[k].inverse() * pair.set_b.poses[k + 1];
    const DualQuaternion qa = screw_of(da);
    const DualQuaternion qb = screw_of(db);

    const Vec3 a = qa.real.vec();
    const Vec3 b = qb.real.vec();
    const Vec3 ap = qa.dual.vec();
    const Vec3 bp = qb.dual.vec();

    const Eigen::Index r = 6 * Eigen::Index(k);
    constraint.block<3, 1>(r, 0) = a - b;
    constraint.block<3, 3>(r, 1) = skew(a + b);
    constraint.block<3, 1>(r + 3, 0) = ap - bp;
    constraint.block<3, 3>(r + 3, 1) = skew(ap + bp);
    constraint.block<3, 1>(r + 3, 4) = a - b;
    constraint.block<3, 3>(r + 3, 5) = skew(a + b);
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraint, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  // The solution space must be exactly 2-dimensional: the two smallest
  // singular values vanish and the sixth one does not.
  if (sv[5] <= 1e-6 * sv[0])
    throw std::runtime_error("degenerate motion for closed form");

  const Eigen::VectorXd v7 = svd.matrixV().col(6);
  const Eigen::VectorXd v8 = svd.matrixV().col(7);
  const Eigen::Vector4d u1 = v7.head<4>();
  const Eigen::Vector4d w1 = v7.tail<4>();
  const Eigen::Vector4d u2 = v8.head<4>();
  const Eigen::Vector4d w2 = v8.tail<4>();

  // lambda1*v7 + lambda2*v8 must satisfy the unit and orthogonality
  // constraints of a rigid dual quaternion; with s = lambda1/lambda2 the
  // orthogonality constraint becomes a quadratic in s.
  const double qa_ = u1.dot(w1);
  const double qb_ = u1.dot(w2) + u2.dot(w1);
  const double qc_ = u2.dot(w2);

  double s1, s2;
  if (std::abs(qa_) < 1e-14) {
    if (std::abs(qb_) < 1e-14)
      throw std::runtime_error("degenerate motion for closed form");
    s1 = s2 = -qc_ / qb_;
  } else {
    const double disc = qb_ * qb_ - 4.0 * qa_ * qc_;
    const double root = std::sqrt(std::max(disc, 0.0));
    s1 = (-qb_ + root) / (2.0 * qa_);
    s2 = (-qb_ - root) / (2.0 * qa_);
  }

  const double n1 = u1.dot(u1);
  const double n12 = u1.dot(u2);
  const double n2 = u2.dot(u2);
  const double val1 = s1 * s1 * n1 + 2.0 * s1 * n12 + n2;
  const double val2 = s2 * s2 * n1 + 2.0 * s2 * n12 + n2;
  const double s = val1 >= val2 ? s1 : s2;
  const double val = std::max(val1, val2);
  if (!(val > 0.0) || !std::isfinite(val))
    throw std::runtime_error("degenerate motion for closed form");

  const double lambda2 = std::sqrt(1.0 / val);
  const double lambda1 = s * lambda2;
  const Eigen::VectorXd sol = lambda1 * v7 + lambda2 * v8;

  DualQuaternion dq;
  dq.real = Eigen::Quaterniond(sol[0], sol[1], sol[2], sol[3]);
  dq.dual = Eigen::Quaterniond(sol[4], sol[5], sol[6], sol[7]);
  return dq.to_rigid();
}

}  // namespace autocal
