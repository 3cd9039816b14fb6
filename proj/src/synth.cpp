#include "autocal/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace autocal {

namespace {

constexpr double kDegToRad = M_PI / 180.0;
// Nominal window used to turn the per-window discontinuity probability into a
// per-sample one.
constexpr double kNominalWindowSamples = 50.0;

// World pose of sensor A at time t for each profile. Smooth by construction;
// angular rates stay below ~40 deg/s.
RigidTransform profile_pose(MotionProfile profile, double t) {
  switch (profile) {
    case MotionProfile::rich_6dof: {
      const Vec3 p(0.5 * std::sin(1.3 * t), 0.4 * std::sin(0.9 * t + 1.0),
                   0.3 * std::sin(1.1 * t + 2.0));
      const Vec3 rv(0.35 * std::sin(1.2 * t + 0.5),
                    0.30 * std::sin(0.8 * t + 1.7),
                    0.40 * std::sin(1.0 * t + 2.9));
      return {Rotation::from_rotation_vector(rv), p};
    }
    case MotionProfile::handheld: {
      const Vec3 p(0.30 * std::sin(0.9 * t), 0.25 * std::sin(0.7 * t + 0.8),
                   0.20 * std::sin(0.8 * t + 1.9));
      const Vec3 rv(0.20 * std::sin(0.8 * t + 0.3),
                    0.18 * std::sin(0.6 * t + 1.2),
                    0.25 * std::sin(0.7 * t + 2.4));
      return {Rotation::from_rotation_vector(rv), p};
    }
    case MotionProfile::straight_line:
      return {Rotation::identity(), Vec3(0.5 * t, 0.1 * t, 0.02 * t)};
    case MotionProfile::stationary:
      return {Rotation::from_rotation_vector(Vec3(0.1, -0.2, 0.3)),
              Vec3(1.0, 2.0, 0.5)};
    case MotionProfile::planar_vehicle:
      break;  // handled by the caller (needs path integration)
  }
  throw std::logic_error("unhandled motion profile");
}

// Slalom on the ground plane: heading follows an oscillating yaw rate and the
// position integrates a constant forward speed. Yaw-only rotations, exactly.
std::vector<RigidTransform> planar_path(double duration, double rate) {
  const double dt = 1.0 / rate;
  const double speed = 0.5;  // m/s
  std::vector<RigidTransform> out;
  double x = 0.0, y = 0.0;
  std::size_t n = static_cast<std::size_t>(duration * rate) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = k * dt;
    const double yaw = 0.9 * std::sin(0.6 * t);
    out.push_back({Rotation::from_axis_angle(Vec3::UnitZ(), yaw),
                   Vec3(x, y, 0.0)});
    x += speed * std::cos(yaw) * dt;
    y += speed * std::sin(yaw) * dt;
  }
  return out;
}

std::vector<RigidTransform> clean_trajectory(const RigConfig& rig) {
  if (rig.profile == MotionProfile::planar_vehicle)
    return planar_path(rig.duration, rig.rate);
  std::vector<RigidTransform> out;
  const std::size_t n = static_cast<std::size_t>(rig.duration * rig.rate) + 1;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    out.push_back(profile_pose(rig.profile, k / rig.rate));
  return out;
}

// Applies increment noise, random-walk drift, unit drift and discontinuities
// to a clean trajectory, re-accumulating from the first pose.
std::vector<RigidTransform> apply_noise(
    const std::vector<RigidTransform>& clean, double rate,
    const NoiseModel& noise) {
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const double dt = 1.0 / rate;
  const double rot_sigma = noise.rotation_sigma_deg * kDegToRad;

  // Random-walk bias velocity, magnitude pinned to drift_rate.
  Vec3 bias_velocity = Vec3::Zero();
  if (noise.drift_rate > 0.0) {
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    bias_velocity = noise.drift_rate * dir.normalized();
  }

  const double p_sample =
      noise.discontinuity_probability / kNominalWindowSamples;

  std::vector<RigidTransform> out;
  out.reserve(clean.size());
  out.push_back(clean.front());
  RigidTransform jump_accum = RigidTransform::identity();

  for (std::size_t k = 1; k < clean.size(); ++k) {
    RigidTransform inc = clean[k - 1].inverse() * clean[k];
    const double t = k * dt;

    if (noise.scale_drift != 0.0)
      inc.translation *= std::exp(-noise.scale_drift * t);
    if (noise.translation_sigma > 0.0)
      inc.translation += noise.translation_sigma *
                         Vec3(gauss(rng), gauss(rng), gauss(rng));
    if (noise.drift_rate > 0.0) {
      inc.translation += bias_velocity * dt;
      bias_velocity += (0.1 * noise.drift_rate * std::sqrt(dt)) *
                       Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    if (rot_sigma > 0.0)
      inc.rotation = inc.rotation * Rotation::from_rotation_vector(
                                        rot_sigma * Vec3(gauss(rng), gauss(rng),
                                                         gauss(rng)));

    RigidTransform pose = out.back() * inc;

    if (noise.discontinuity_probability > 0.0 && uniform(rng) < p_sample) {
      Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
      const RigidTransform jump{
          Rotation::identity(),
          noise.discontinuity_magnitude * dir.normalized()};
      jump_accum = jump * jump_accum;
    }
    out.push_back(jump_accum * pose);
  }
  return out;
}

PoseStream to_stream(const std::string& id,
                     const std::vector<RigidTransform>& poses, double rate) {
  PoseStream s;
  s.sensor_id = id;
  s.poses.reserve(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k)
    s.poses.push_back({k / rate, poses[k]});
  return s;
}

}  // namespace

MotionProfile motion_profile_from_string(const std::string& name) {
  if (name == "rich_6dof") return MotionProfile::rich_6dof;
  if (name == "planar_vehicle") return MotionProfile::planar_vehicle;
  if (name == "straight_line") return MotionProfile::straight_line;
  if (name == "stationary") return MotionProfile::stationary;
  if (name == "handheld") return MotionProfile::handheld;
  throw std::invalid_argument("unknown motion profile: " + name);
}

std::string to_string(MotionProfile profile) {
  switch (profile) {
    case MotionProfile::rich_6dof: return "rich_6dof";
    case MotionProfile::planar_vehicle: return "planar_vehicle";
    case MotionProfile::straight_line: return "straight_line";
    case MotionProfile::stationary: return "stationary";
    case MotionProfile::handheld: return "handheld";
  }
  return "unknown";
}

SimulatedRig generate(const RigConfig& rig, const NoiseModel& noise_a,
                      const NoiseModel& noise_b) {
  if (!(rig.rate > 0.0) || !(rig.duration > 0.0))
    throw std::invalid_argument("rig rate and duration must be positive");

  const std::vector<RigidTransform> a_clean = clean_trajectory(rig);
  const SimilarityTransform& x = rig.true_extrinsic;

  // Physical mount: rotation and first-sensor-unit lever arm of X.
  const RigidTransform mount{x.rotation(), x.scaled_translation()};
  // Fixed world offset of the second sensor's odometry frame, applied in its
  // own units; rebasing must cancel it.
  const RigidTransform world_b{
      Rotation::from_axis_angle(Vec3::UnitZ(), 0.5), Vec3(5.0, -2.0, 1.0)};

  const double s = x.scale();
  std::vector<RigidTransform> b_metric;
  std::vector<RigidTransform> b_clean;
  b_metric.reserve(a_clean.size());
  b_clean.reserve(a_clean.size());
  for (const RigidTransform& pa : a_clean) {
    const RigidTransform pb_metric = pa * mount;
    b_metric.push_back(pb_metric);
    b_clean.push_back(
        world_b * RigidTransform{pb_metric.rotation,
                                 pb_metric.translation / s});
  }

  SimulatedRig out;
  out.a = to_stream("a", apply_noise(a_clean, rig.rate, noise_a), rig.rate);
  out.b = to_stream("b", apply_noise(b_clean, rig.rate, noise_b), rig.rate);
  out.truth.extrinsic = x;
  out.truth.clean_a = to_stream("a_clean", a_clean, rig.rate);
  out.truth.clean_b = to_stream("b_clean", b_clean, rig.rate);
  out.truth.clean_b_metric = to_stream("b_metric", b_metric, rig.rate);
  out.truth.scale_series.reserve(a_clean.size());
  for (std::size_t k = 0; k < a_clean.size(); ++k) {
    const double t = k / rig.rate;
    out.truth.scale_series.push_back(
        {t, s * std::exp(noise_b.scale_drift * t)});
  }
  return out;
}

PoseStream inject_discontinuity(const PoseStream& stream, double at,
                                const RigidTransform& jump) {
  if (stream.poses.empty() || at < stream.poses.front().timestamp ||
      at > stream.poses.back().timestamp)
    throw std::invalid_argument("discontinuity timestamp outside stream");
  PoseStream out = stream;
  for (Pose& p : out.poses)
    if (p.timestamp > at) p.transform = jump * p.transform;
  return out;
}

}  // namespace autocal
