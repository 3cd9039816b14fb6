#pragma once

#include "autocal/geometry.hpp"
#include "autocal/sync.hpp"

#include <Eigen/Dense>

namespace autocal {

/// Dual quaternion q + eps*q' for a rigid transform: ||real|| = 1 and
/// real . dual = 0.
struct DualQuaternion {
  Eigen::Quaterniond real{1, 0, 0, 0};
  Eigen::Quaterniond dual{0, 0, 0, 0};

  static DualQuaternion from_rigid(const RigidTransform& t);
  RigidTransform to_rigid() const;
};

/// Closed-form dual-quaternion hand-eye solve over the consecutive relative
/// motions of a window. Scale is fixed at 1 by construction. Throws
/// std::runtime_error("degenerate motion for closed form") when the
/// constraint matrix does not have a 2-dimensional null space (e.g. rotation
/// about a single axis only).
RigidTransform solve_dual_quaternion(const SyncedPair& pair);

}  // namespace autocal
