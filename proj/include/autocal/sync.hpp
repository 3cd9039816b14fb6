#pragma once

#include "autocal/geometry.hpp"

#include <span>
#include <string>
#include <vector>

namespace autocal {

struct PoseStream {
  std::string sensor_id;
  std::vector<Pose> poses;  // strictly increasing timestamps

  /// Throws std::invalid_argument if timestamps are not strictly increasing
  /// or any pose is invalid.
  void validate() const;
};

/// A window of poses rebased so the first element is the identity. `origin`
/// keeps the raw pose at the window start, so origin * poses[k] recovers the
/// raw stream.
struct PoseSet {
  std::vector<RigidTransform> poses;
  std::vector<double> timestamps;
  RigidTransform origin;

  std::size_t size() const { return poses.size(); }
};

/// A pair of equally sized, per-index time-matched windows.
struct SyncedPair {
  PoseSet set_a;
  PoseSet set_b;
  double max_time_residual = 0.0;

  std::size_t size() const { return set_a.poses.size(); }
};

/// One raw time-aligned sample pair, before windowing/rebasing.
struct AlignedSample {
  double timestamp = 0.0;
  RigidTransform pose_a;
  RigidTransform pose_b;
  double time_residual = 0.0;
};

struct SyncOptions {
  double tolerance = 0.02;  // seconds
  bool interpolate = false;
  /// Drop samples whose motion from the previously kept sample is below the
  /// stationary thresholds on both streams.
  bool drop_stationary = true;
  double stationary_translation = 1e-3;   // meters
  double stationary_rotation_deg = 0.01;  // degrees
};

/// Pairs each timestamp of the sparser stream with the nearest (or, with
/// interpolation, SLERP/lerp-resampled) pose of the other stream. Pairs whose
/// time residual exceeds the tolerance are dropped. Throws
/// std::invalid_argument when the streams have no temporal overlap.
std::vector<AlignedSample> synchronize(const PoseStream& a,
                                       const PoseStream& b,
                                       const SyncOptions& opts = {});

/// Rebase a window so element 0 becomes the identity:
/// out.poses[k] = window[0].transform^-1 * window[k].transform.
PoseSet rebase(std::span<const Pose> window);

/// Slice an aligned sample sequence into overlapping windows of
/// `window_length` samples every `stride` samples, each side independently
/// rebased. Returns an empty list when there are fewer samples than
/// `window_length`.
std::vector<SyncedPair> make_windows(const std::vector<AlignedSample>& samples,
                                     std::size_t window_length,
                                     std::size_t stride);

}  // namespace autocal
