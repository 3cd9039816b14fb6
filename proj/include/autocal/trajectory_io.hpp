#pragma once

#include "autocal/sync.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace autocal {

enum class TrajectoryFormat {
  /// Per line: "timestamp tx ty tz qx qy qz qw", '#' starts a comment.
  tum,
  /// Per line: 12 reals, the row-major top 3x4 of the pose matrix; timestamps
  /// are implicit line indices at a fixed rate. Read-only.
  kitti_matrix,
};

TrajectoryFormat trajectory_format_from_string(const std::string& name);

struct ParseOptions {
  TrajectoryFormat format = TrajectoryFormat::tum;
  double kitti_rate = 10.0;  // Hz, for the implicit timestamps
  std::string sensor_id;
};

/// Parses a trajectory file into a sorted, validated stream. Malformed lines
/// raise std::runtime_error naming the file and line. Quaternions off unit
/// norm by more than 1e-3 are an error; smaller deviations are renormalized
/// with a warning appended to `warnings` when provided.
PoseStream parse_trajectory(const std::filesystem::path& path,
                            const ParseOptions& opts = {},
                            std::vector<std::string>* warnings = nullptr);

PoseStream parse_trajectory_stream(std::istream& in, const std::string& name,
                                   const ParseOptions& opts = {},
                                   std::vector<std::string>* warnings =
                                       nullptr);

void write_trajectory_tum(const PoseStream& stream,
                          const std::filesystem::path& path);
void write_trajectory_tum(const PoseStream& stream, std::ostream& out);

}  // namespace autocal
