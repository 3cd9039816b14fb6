#pragma once

#include "autocal/geometry.hpp"
#include "autocal/sync.hpp"

#include <utility>

namespace autocal {

struct EvalReport {
  double ate_rmse = 0.0;             // meters
  double rpe_rmse_trans = 0.0;       // meters
  double rpe_rmse_rot_deg = 0.0;     // degrees
  double calib_translation_error = 0.0;  // meters, first-sensor units
  double calib_rotation_error_deg = 0.0;
  double scale_error = 0.0;          // relative
};

/// Absolute trajectory error: time-associate the streams, rigidly align the
/// estimated positions to the reference (rotation + translation least
/// squares) and return the RMSE of the residual positions. Throws with fewer
/// than 3 correspondences.
double ate(const PoseStream& est, const PoseStream& ref,
           double association_tolerance = 0.02);

/// Relative pose error at step `delta`:
/// E_i = (Q_i^-1 Q_{i+d})^-1 (P_i^-1 P_{i+d}); returns the RMSE of the
/// translation norms (meters) and rotation angles (degrees). Throws when
/// delta >= number of associated poses.
std::pair<double, double> rpe(const PoseStream& est, const PoseStream& ref,
                              std::size_t delta = 1,
                              double association_tolerance = 0.02);

/// Trajectory agreement under a calibration estimate: rebases both streams,
/// maps every B pose through the estimate's conjugation into A's frame and
/// scores the predicted stream against A with ATE and RPE. Calibration
/// errors against `truth` are filled when provided.
EvalReport evaluate(const PoseStream& traj_a, const PoseStream& traj_b,
                    const SimilarityTransform& estimate,
                    const SimilarityTransform* truth = nullptr,
                    std::size_t rpe_delta = 1);

/// Error of an estimated extrinsic against the true one: lever-arm distance
/// in first-sensor units, geodesic rotation angle in degrees and relative
/// scale error.
struct CalibrationError {
  double translation = 0.0;
  double rotation_deg = 0.0;
  double scale = 0.0;
};
CalibrationError calibration_error(const SimilarityTransform& estimate,
                                   const SimilarityTransform& truth);

}  // namespace autocal
