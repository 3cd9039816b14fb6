#pragma once

#include "autocal/geometry.hpp"
#include "autocal/solver.hpp"
#include "autocal/sync.hpp"
#include "autocal/synth.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <vector>

namespace autocal {

enum class RejectionReason {
  none,
  insufficient_motion,
  high_cost,
  ransac_outlier,
};

std::string to_string(RejectionReason reason);

struct MotionDiagnostics {
  /// Eigenvalues of the covariance of window positions, descending.
  Vec3 position_eigenvalues = Vec3::Zero();
  /// Eigenvalues of the second-moment matrix of rotation-vector increments,
  /// descending (rad^2), with the matching eigenvectors as columns.
  Vec3 rotation_axis_eigenvalues = Vec3::Zero();
  Mat3 rotation_axis_vectors = Mat3::Identity();
  /// Sum of consecutive geodesic rotation increments, degrees.
  double total_rotation_deg = 0.0;
  bool stationary = false;
};

struct PipelineOptions {
  /// Minimum second/first position-covariance eigenvalue ratio.
  double min_eigen_ratio = 0.05;
  double min_total_rotation_deg = 5.0;
  /// Per-pose-pair Frobenius cost above which a window estimate is discarded
  /// (boundary inclusive: a cost exactly at the threshold is kept).
  double cost_threshold = 0.05;
  int ransac_iterations = 100;
  double ransac_translation_inlier = 0.05;  // meters
  double ransac_rotation_inlier_deg = 1.0;
  double ransac_scale_inlier = 0.10;  // relative, used when scale is solved
  /// Rotation excitation below this second-moment level does not count
  /// towards translation-axis observability.
  double axis_excitation_floor = 1.2e-5;  // rad^2, ~(0.2 deg)^2
  std::size_t history_capacity = 500;
  std::uint64_t seed = 0;
  SolverOptions solver_options;
};

struct GateResult {
  bool accepted = false;
  /// Which translation axes the window's motion can determine.
  std::array<bool, 3> observable_axes{false, false, false};
};

struct WindowEstimate {
  std::size_t index = 0;
  SimilarityTransform estimate;
  double cost = 0.0;           // total Frobenius cost of the window solve
  double cost_per_pair = 0.0;
  std::size_t pair_count = 0;
  double start_time = 0.0;
  double end_time = 0.0;
  MotionDiagnostics diagnostics;
  std::array<bool, 3> observable_axes{false, false, false};
  bool solved = false;
  bool accepted = false;
  RejectionReason rejection_reason = RejectionReason::insufficient_motion;
};

struct CalibrationState {
  SimilarityTransform consolidated;
  std::size_t inlier_count = 0;
  std::deque<WindowEstimate> window_history;
  /// Axes determined by at least one inlier window's motion.
  std::array<bool, 3> observable_axes{false, false, false};
  std::vector<ScaleSample> scale_history;
  std::size_t windows_processed = 0;
  bool updated_last_step = false;
};

/// Fresh state whose consolidated estimate starts at the solver's initial
/// guess (the prior calibration, when one exists).
CalibrationState make_initial_state(const PipelineOptions& opts);

MotionDiagnostics diagnose_motion(const SyncedPair& pair);

/// Rejects stationary windows, windows with too little total rotation and
/// windows whose positions are too collinear; reports per-axis translation
/// observability from the rotation-axis eigenvalue pattern.
GateResult gate(const MotionDiagnostics& d, const PipelineOptions& opts);

/// True when the estimate survives the per-pair cost threshold.
bool early_reject_pass(double cost_per_pair, const PipelineOptions& opts);

/// Consensus filter over window estimates: every candidate serves as a
/// hypothesis (sampled when there are more than ransac_iterations of them)
/// and inliers must agree within the translation/rotation bands, plus the
/// relative scale band when scale is solved. Ties are broken by lower summed
/// translation residual, then first-seen. Returns indices into `candidates`.
std::vector<std::size_t> ransac_filter(
    const std::vector<const WindowEstimate*>& candidates,
    const PipelineOptions& opts);

struct ConsolidateResult {
  SimilarityTransform value;
  bool updated = false;
};

/// Componentwise mean translation, chordal-mean rotation and geometric-mean
/// scale over the inliers. Translation axes no inlier window can observe
/// keep the prior's value; with an active regularizer every axis counts.
/// An empty inlier set keeps the prior (updated=false).
ConsolidateResult consolidate(const std::vector<const WindowEstimate*>& inliers,
                              const SimilarityTransform& prior,
                              const PipelineOptions& opts);

/// One pipeline step: diagnose, gate, solve (warm-started from the current
/// consolidated estimate), cost-reject, re-run RANSAC over the history and
/// consolidate. Never throws on bad windows; they become rejected estimates.
CalibrationState step(CalibrationState state, const SyncedPair& pair,
                      const PipelineOptions& opts);

/// Rescales successive translation increments by the scale in effect at each
/// timestamp (step interpolation over scale_history) and re-accumulates.
/// Throws when scale_history is empty.
PoseStream rescale_trajectory(const PoseStream& stream,
                              const std::vector<ScaleSample>& scale_history);

}  // namespace autocal
