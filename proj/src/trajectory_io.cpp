#include "autocal/trajectory_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace autocal {

TrajectoryFormat trajectory_format_from_string(const std::string& name) {
  if (name == "tum") return TrajectoryFormat::tum;
  if (name == "kitti" || name == "kitti_matrix")
    return TrajectoryFormat::kitti_matrix;
  throw std::invalid_argument("unknown trajectory format: " + name);
}

namespace {

[[noreturn]] void parse_fail(const std::string& name, std::size_t line,
                             const std::string& what) {
  throw std::runtime_error(name + ":" + std::to_string(line) + ": " + what);
}

Pose parse_tum_line(const std::vector<double>& f, const std::string& name,
                    std::size_t line, std::vector<std::string>* warnings) {
  Pose p;
  p.timestamp = f[0];
  p.transform.translation = Vec3(f[1], f[2], f[3]);
  Eigen::Quaterniond q(f[7], f[4], f[5], f[6]);  // file order: qx qy qz qw
  const double norm = q.norm();
  if (std::abs(norm - 1.0) > 1e-3)
    parse_fail(name, line,
               "quaternion norm " + std::to_string(norm) + " is not unit");
  if (std::abs(norm - 1.0) > 1e-9 && warnings)
    warnings->push_back(name + ":" + std::to_string(line) +
                        ": renormalizing quaternion (norm " +
                        std::to_string(norm) + ")");
  p.transform.rotation = Rotation(q);
  return p;
}

Pose parse_kitti_line(const std::vector<double>& f, const std::string& name,
                      std::size_t line, std::size_t index, double rate) {
  Mat4 m = Mat4::Identity();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = f[4 * r + c];
  const Mat3 rot = m.topLeftCorner<3, 3>();
  if (std::abs(rot.determinant() - 1.0) > 1e-3 ||
      (rot * rot.transpose() - Mat3::Identity()).norm() > 1e-3)
    parse_fail(name, line, "rotation block is not orthonormal");
  Pose p;
  p.timestamp = double(index) / rate;
  p.transform = RigidTransform::from_matrix(m);
  return p;
}

}  // namespace

PoseStream parse_trajectory_stream(std::istream& in, const std::string& name,
                                   const ParseOptions& opts,
                                   std::vector<std::string>* warnings) {
  PoseStream stream;
  stream.sensor_id = opts.sensor_id.empty() ? name : opts.sensor_id;

  const std::size_t expected_fields =
      opts.format == TrajectoryFormat::tum ? 8 : 12;
  std::string line;
  std::size_t line_no = 0;
  std::size_t pose_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::vector<double> fields;
    double v;
    while (ss >> v) fields.push_back(v);
    if (fields.empty()) {
      std::string rest;
      ss.clear();
      if (ss >> rest) parse_fail(name, line_no, "unparseable token: " + rest);
      continue;  // blank or comment-only line
    }
    if (!ss.eof()) {
      std::string rest;
      ss.clear();
      ss >> rest;
      parse_fail(name, line_no, "unparseable token: " + rest);
    }
    if (fields.size() != expected_fields)
      parse_fail(name, line_no,
                 "expected " + std::to_string(expected_fields) +
                     " fields, got " + std::to_string(fields.size()));

    Pose p = opts.format == TrajectoryFormat::tum
                 ? parse_tum_line(fields, name, line_no, warnings)
                 : parse_kitti_line(fields, name, line_no, pose_index,
                                    opts.kitti_rate);
    try {
      validate_pose(p);
    } catch (const std::exception& e) {
      parse_fail(name, line_no, e.what());
    }
    stream.poses.push_back(p);
    ++pose_index;
  }

  std::stable_sort(stream.poses.begin(), stream.poses.end(),
                   [](const Pose& a, const Pose& b) {
                     return a.timestamp < b.timestamp;
                   });
  for (std::size_t i = 1; i < stream.poses.size(); ++i)
    if (stream.poses[i].timestamp == stream.poses[i - 1].timestamp)
      throw std::runtime_error(name + ": duplicate timestamp " +
                               std::to_string(stream.poses[i].timestamp));
  return stream;
}

PoseStream parse_trajectory(const std::filesystem::path& path,
                            const ParseOptions& opts,
                            std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_trajectory_stream(in, path.string(), opts, warnings);
}

void write_trajectory_tum(const PoseStream& stream, std::ostream& out) {
  char buf[256];
  for (const Pose& p : stream.poses) {
    const Eigen::Quaterniond& q = p.transform.rotation.quaternion();
    const Vec3& t = p.transform.translation;
    std::snprintf(buf, sizeof(buf),
                  "%.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", p.timestamp,
                  t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out << buf;
  }
}

void write_trajectory_tum(const PoseStream& stream,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_trajectory_tum(stream, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace autocal
