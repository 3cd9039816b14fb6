#include "autocal/metrics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace autocal {

namespace {

struct Associated {
  std::vector<RigidTransform> est;
  std::vector<RigidTransform> ref;
};

Associated associate(const PoseStream& est, const PoseStream& ref,
                     double tolerance) {
  SyncOptions opts;
  opts.tolerance = tolerance;
  opts.drop_stationary = false;
  const std::vector<AlignedSample> samples = synchronize(est, ref, opts);
  Associated out;
  out.est.reserve(samples.size());
  out.ref.reserve(samples.size());
  for (const AlignedSample& s : samples) {
    out.est.push_back(s.pose_a);
    out.ref.push_back(s.pose_b);
  }
  return out;
}

// Rigid least-squares alignment est -> ref over positions (Horn/Umeyama with
// the scale fixed at 1).
RigidTransform align_rigid(const std::vector<RigidTransform>& est,
                           const std::vector<RigidTransform>& ref) {
  const std::size_t n = est.size();
  Vec3 mean_e = Vec3::Zero(), mean_r = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mean_e += est[i].translation;
    mean_r += ref[i].translation;
  }
  mean_e /= double(n);
  mean_r /= double(n);

  Mat3 sigma = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i)
    sigma += (ref[i].translation - mean_r) *
             (est[i].translation - mean_e).transpose();

  Eigen::JacobiSVD<Mat3> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  if (u.determinant() * svd.matrixV().determinant() < 0.0) u.col(2) *= -1.0;
  const Mat3 r = u * svd.matrixV().transpose();
  return {Rotation::from_matrix(r), mean_r - r * mean_e};
}

}  // namespace

double ate(const PoseStream& est, const PoseStream& ref,
           double association_tolerance) {
  const Associated assoc = associate(est, ref, association_tolerance);
  if (assoc.est.size() < 3)
    throw std::invalid_argument("ate needs at least 3 correspondences");

  const RigidTransform alignment = align_rigid(assoc.est, assoc.ref);
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < assoc.est.size(); ++i) {
    const Vec3 residual =
        alignment * assoc.est[i].translation - assoc.ref[i].translation;
    sq_sum += residual.squaredNorm();
  }
  return std::sqrt(sq_sum / double(assoc.est.size()));
}

std::pair<double, double> rpe(const PoseStream& est, const PoseStream& ref,
                              std::size_t delta,
                              double association_tolerance) {
  const Associated assoc = associate(est, ref, association_tolerance);
  if (delta == 0) throw std::invalid_argument("rpe delta must be >= 1");
  if (delta >= assoc.est.size())
    throw std::invalid_argument("rpe delta exceeds trajectory length");

  double trans_sq = 0.0;
  double rot_sq = 0.0;
  const std::size_t count = assoc.est.size() - delta;
  for (std::size_t i = 0; i < count; ++i) {
    const RigidTransform de = assoc.est[i].inverse() * assoc.est[i + delta];
    const RigidTransform dr = assoc.ref[i].inverse() * assoc.ref[i + delta];
    const RigidTransform err = dr.inverse() * de;
    trans_sq += err.translation.squaredNorm();
    const double angle =
        rotation_angle_between(err.rotation, Rotation::identity());
    rot_sq += angle * angle;
  }
  return {std::sqrt(trans_sq / double(count)),
          std::sqrt(rot_sq / double(count))};
}

CalibrationError calibration_error(const SimilarityTransform& estimate,
                                   const SimilarityTransform& truth) {
  CalibrationError err;
  err.translation =
      (estimate.scaled_translation() - truth.scaled_translation()).norm();
  err.rotation_deg = rotation_angle_between(estimate.rotation(),
                                            truth.rotation());
  err.scale = std::abs(estimate.scale() / truth.scale() - 1.0);
  return err;
}

EvalReport evaluate(const PoseStream& traj_a, const PoseStream& traj_b,
                    const SimilarityTransform& estimate,
                    const SimilarityTransform* truth, std::size_t rpe_delta) {
  const Associated assoc = associate(traj_a, traj_b, 0.02);
  if (assoc.est.size() < 3)
    throw std::invalid_argument("evaluate needs at least 3 correspondences");

  // Rebase both sides to their first pose, then map B through the estimated
  // extrinsic into A's frame.
  const RigidTransform a0_inv = assoc.est.front().inverse();
  const RigidTransform b0_inv = assoc.ref.front().inverse();
  PoseStream actual_a, predicted_a;
  actual_a.sensor_id = "a";
  predicted_a.sensor_id = "a_from_b";
  const SimilarityTransform x_inv = estimate.inverse();
  for (std::size_t i = 0; i < assoc.est.size(); ++i) {
    const double t = double(i);
    actual_a.poses.push_back({t, a0_inv * assoc.est[i]});
    const RigidTransform b_rel = b0_inv * assoc.ref[i];
    predicted_a.poses.push_back({t, conjugate_pose(x_inv, b_rel)});
  }

  EvalReport report;
  report.ate_rmse = ate(predicted_a, actual_a, 0.25);
  const auto [rpe_t, rpe_r] = rpe(predicted_a, actual_a, rpe_delta, 0.25);
  report.rpe_rmse_trans = rpe_t;
  report.rpe_rmse_rot_deg = rpe_r;
  if (truth) {
    const CalibrationError err = calibration_error(estimate, *truth);
    report.calib_translation_error = err.translation;
    report.calib_rotation_error_deg = err.rotation_deg;
    report.scale_error = err.scale;
  }
  return report;
}

}  // namespace autocal
