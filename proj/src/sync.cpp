#include "autocal/sync.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace autocal {

void PoseStream::validate() const {
  for (std::size_t i = 0; i < poses.size(); ++i) {
    validate_pose(poses[i]);
    if (i > 0 && poses[i].timestamp <= poses[i - 1].timestamp)
      throw std::invalid_argument("pose stream timestamps must be strictly "
                                  "increasing (sensor " + sensor_id + ")");
  }
}

namespace {

// Index of the pose with timestamp closest to t. Stream must be non-empty.
std::size_t nearest_index(const std::vector<Pose>& poses, double t) {
  auto it = std::lower_bound(
      poses.begin(), poses.end(), t,
      [](const Pose& p, double ts) { return p.timestamp < ts; });
  if (it == poses.begin()) return 0;
  if (it == poses.end()) return poses.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - poses.begin());
  return (t - poses[hi - 1].timestamp <= poses[hi].timestamp - t) ? hi - 1
                                                                  : hi;
}

RigidTransform interpolate_pose(const Pose& p0, const Pose& p1, double t) {
  const double dt = p1.timestamp - p0.timestamp;
  const double u = dt > 0.0 ? (t - p0.timestamp) / dt : 0.0;
  return {p0.transform.rotation.slerp(p1.transform.rotation, u),
          (1.0 - u) * p0.transform.translation +
              u * p1.transform.translation};
}

}  // namespace

std::vector<AlignedSample> synchronize(const PoseStream& a,
                                       const PoseStream& b,
                                       const SyncOptions& opts) {
  if (a.poses.empty() || b.poses.empty())
    throw std::invalid_argument("no temporal overlap: empty stream");

  const double overlap_begin =
      std::max(a.poses.front().timestamp, b.poses.front().timestamp);
  const double overlap_end =
      std::min(a.poses.back().timestamp, b.poses.back().timestamp);
  if (overlap_begin > overlap_end + opts.tolerance)
    throw std::invalid_argument("no temporal overlap");

  // The sparser stream drives the pairing; a drives ties.
  const bool a_drives = a.poses.size() <= b.poses.size();
  const PoseStream& drv = a_drives ? a : b;
  const PoseStream& oth = a_drives ? b : a;

  std::vector<AlignedSample> out;
  out.reserve(drv.poses.size());
  for (const Pose& p : drv.poses) {
    const double t = p.timestamp;
    RigidTransform matched;
    double residual = 0.0;
    bool ok = false;

    if (opts.interpolate && t >= oth.poses.front().timestamp &&
        t <= oth.poses.back().timestamp) {
      auto it = std::lower_bound(
          oth.poses.begin(), oth.poses.end(), t,
          [](const Pose& q, double ts) { return q.timestamp < ts; });
      if (it == oth.poses.begin()) {
        matched = it->transform;
      } else {
        matched = interpolate_pose(*(it - 1), *it, t);
      }
      ok = true;
    } else {
      const std::size_t j = nearest_index(oth.poses, t);
      residual = std::abs(oth.poses[j].timestamp - t);
      if (residual <= opts.tolerance) {
        matched = oth.poses[j].transform;
        ok = true;
      }
    }
    if (!ok) continue;

    AlignedSample s;
    s.timestamp = t;
    s.time_residual = residual;
    s.pose_a = a_drives ? p.transform : matched;
    s.pose_b = a_drives ? matched : p.transform;
    out.push_back(s);
  }

  if (opts.drop_stationary && out.size() > 1) {
    std::vector<AlignedSample> kept;
    kept.reserve(out.size());
    kept.push_back(out.front());
    for (std::size_t i = 1; i < out.size(); ++i) {
      const AlignedSample& prev = kept.back();
      const AlignedSample& cur = out[i];
      const double da =
          (cur.pose_a.translation - prev.pose_a.translation).norm();
      const double db =
          (cur.pose_b.translation - prev.pose_b.translation).norm();
      const double ra =
          rotation_angle_between(cur.pose_a.rotation, prev.pose_a.rotation);
      const double rb =
          rotation_angle_between(cur.pose_b.rotation, prev.pose_b.rotation);
      const bool still = da < opts.stationary_translation &&
                         db < opts.stationary_translation &&
                         ra < opts.stationary_rotation_deg &&
                         rb < opts.stationary_rotation_deg;
      if (!still) kept.push_back(cur);
    }
    out = std::move(kept);
  }
  return out;
}

PoseSet rebase(std::span<const Pose> window) {
  if (window.empty()) throw std::invalid_argument("cannot rebase empty window");
  PoseSet set;
  set.origin = window.front().transform;
  const RigidTransform inv = set.origin.inverse();
  set.poses.reserve(window.size());
  set.timestamps.reserve(window.size());
  for (const Pose& p : window) {
    set.poses.push_back(inv * p.transform);
    set.timestamps.push_back(p.timestamp);
  }
  return set;
}

namespace {

PoseSet rebase_side(const std::vector<AlignedSample>& samples,
                    std::size_t begin, std::size_t len, bool side_a) {
  std::vector<Pose> window;
  window.reserve(len);
  for (std::size_t i = begin; i < begin + len; ++i)
    window.push_back({samples[i].timestamp,
                      side_a ? samples[i].pose_a : samples[i].pose_b});
  return rebase(window);
}

}  // namespace

std::vector<SyncedPair> make_windows(const std::vector<AlignedSample>& samples,
                                     std::size_t window_length,
                                     std::size_t stride) {
  if (window_length < 2)
    throw std::invalid_argument("window_length must be >= 2");
  if (stride < 1 || stride > window_length)
    throw std::invalid_argument("stride must be in [1, window_length]");

  std::vector<SyncedPair> windows;
  if (samples.size() < window_length) return windows;

  const std::size_t count = (samples.size() - window_length) / stride + 1;
  windows.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t begin = w * stride;
    SyncedPair pair;
    pair.set_a = rebase_side(samples, begin, window_length, true);
    pair.set_b = rebase_side(samples, begin, window_length, false);
    for (std::size_t i = begin; i < begin + window_length; ++i)
      pair.max_time_residual =
          std::max(pair.max_time_residual, samples[i].time_residual);
    windows.push_back(std::move(pair));
  }
  return windows;
}

}  // namespace autocal
