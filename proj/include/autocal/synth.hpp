#pragma once

#include "autocal/geometry.hpp"
#include "autocal/sync.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace autocal {

enum class MotionProfile {
  rich_6dof,
  planar_vehicle,
  straight_line,
  stationary,
  handheld,
};

MotionProfile motion_profile_from_string(const std::string& name);
std::string to_string(MotionProfile profile);

struct RigConfig {
  SimilarityTransform true_extrinsic;
  MotionProfile profile = MotionProfile::rich_6dof;
  double duration = 60.0;  // seconds
  double rate = 10.0;      // Hz
};

struct NoiseModel {
  double translation_sigma = 0.0;     // meters per pose increment
  double rotation_sigma_deg = 0.0;    // degrees per pose increment
  double drift_rate = 0.0;            // m/s random-walk translation bias
  double scale_drift = 0.0;           // relative unit drift per second
  double discontinuity_probability = 0.0;  // per nominal 50-sample window
  double discontinuity_magnitude = 0.0;    // meters
  std::uint64_t seed = 0;
};

struct ScaleSample {
  double timestamp = 0.0;
  double scale = 1.0;
};

struct GroundTruth {
  SimilarityTransform extrinsic;
  PoseStream clean_a;         // noiseless first-sensor trajectory
  PoseStream clean_b;         // noiseless second-sensor stream, its own units
  PoseStream clean_b_metric;  // second sensor's physical path, metric units
  /// True unit ratio over time (constant unless scale_drift is nonzero).
  std::vector<ScaleSample> scale_series;
};

struct SimulatedRig {
  PoseStream a;
  PoseStream b;
  GroundTruth truth;
};

/// Simulates two rigidly mounted sensors. Stream A follows the motion
/// profile; each noiseless B pose is the conjugation of A by the true
/// extrinsic, which divides translations by the true scale. Noise is applied
/// per stream to relative pose increments and re-accumulated, so sigma acts
/// per step and drift compounds. Deterministic for fixed seeds.
SimulatedRig generate(const RigConfig& rig, const NoiseModel& noise_a = {},
                      const NoiseModel& noise_b = {});

/// Left-multiplies every pose strictly after `at` by `jump`, emulating a
/// pose-stream discontinuity such as a loop-closure correction. Throws when
/// `at` lies outside the stream's time range.
PoseStream inject_discontinuity(const PoseStream& stream, double at,
                                const RigidTransform& jump);

}  // namespace autocal
