#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "autocal/metrics.hpp"
#include "autocal/synth.hpp"
#include "autocal/trajectory_io.hpp"
#include "oracle.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace autocal;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

PoseStream random_stream(oracle::Rng& rng, std::size_t n) {
  PoseStream s;
  s.sensor_id = "s";
  const auto mats = oracle::random_trajectory(rng, n);
  for (std::size_t k = 0; k < n; ++k)
    s.poses.push_back({0.1 * k, oracle::rigid_from_mat(mats[k])});
  return s;
}

}  // namespace

TEST_CASE("tum parsing") {
  SUBCASE("single identity pose") {
    std::istringstream in("# comment line\n0.0 0 0 0 0 0 0 1\n");
    const PoseStream s = parse_trajectory_stream(in, "mem");
    REQUIRE(s.poses.size() == 1);
    CHECK((s.poses[0].transform.matrix() - Mat4::Identity()).norm() == 0.0);
  }
  SUBCASE("round trip within 1e-9") {
    oracle::Rng rng(71);
    const PoseStream s = random_stream(rng, 25);
    const auto path = temp_file("autocal_roundtrip.tum");
    write_trajectory_tum(s, path);
    const PoseStream back = parse_trajectory(path);
    REQUIRE(back.poses.size() == s.poses.size());
    for (std::size_t k = 0; k < s.poses.size(); ++k) {
      CHECK(std::abs(back.poses[k].timestamp - s.poses[k].timestamp) < 1e-9);
      CHECK((back.poses[k].transform.translation -
             s.poses[k].transform.translation).norm() < 1e-9);
      CHECK(rotation_angle_between(back.poses[k].transform.rotation,
                                   s.poses[k].transform.rotation) < 1e-6);
    }
    std::filesystem::remove(path);
  }
  SUBCASE("malformed line reports its location") {
    std::istringstream in("0.0 0 0 0 0 0 0 1\n0.1 0 bad 0 0 0 0 1\n");
    CHECK_THROWS_WITH_AS(parse_trajectory_stream(in, "mem"),
                         doctest::Contains("mem:2"), std::runtime_error);
  }
  SUBCASE("wrong field count reports its location") {
    std::istringstream in("0.0 0 0 0 0 0 1\n");
    CHECK_THROWS_WITH_AS(parse_trajectory_stream(in, "mem"),
                         doctest::Contains("mem:1"), std::runtime_error);
  }
  SUBCASE("quaternion renormalization and rejection") {
    // Norm off by 5e-4: renormalized with a warning.
    std::istringstream ok("0.0 0 0 0 0 0 0 1.0005\n");
    std::vector<std::string> warnings;
    const PoseStream s = parse_trajectory_stream(ok, "mem", {}, &warnings);
    CHECK(std::abs(s.poses[0].transform.rotation.quaternion().norm() - 1.0) <
          1e-12);
    CHECK(warnings.size() == 1);
    // Norm off by more than 1e-3: an error.
    std::istringstream bad("0.0 0 0 0 0 0 0 1.01\n");
    CHECK_THROWS_AS(parse_trajectory_stream(bad, "mem"), std::runtime_error);
  }
  SUBCASE("out-of-order lines are sorted, duplicates rejected") {
    std::istringstream in("1.0 1 0 0 0 0 0 1\n0.5 0 0 0 0 0 0 1\n");
    const PoseStream s = parse_trajectory_stream(in, "mem");
    CHECK(s.poses.front().timestamp == 0.5);
    std::istringstream dup("1.0 1 0 0 0 0 0 1\n1.0 0 0 0 0 0 0 1\n");
    CHECK_THROWS_AS(parse_trajectory_stream(dup, "mem"), std::runtime_error);
  }
}

TEST_CASE("kitti parsing") {
  SUBCASE("identity line") {
    std::istringstream in("1 0 0 0 0 1 0 0 0 0 1 0\n");
    ParseOptions opts;
    opts.format = TrajectoryFormat::kitti_matrix;
    const PoseStream s = parse_trajectory_stream(in, "mem", opts);
    REQUIRE(s.poses.size() == 1);
    CHECK((s.poses[0].transform.matrix() - Mat4::Identity()).norm() == 0.0);
    CHECK(s.poses[0].timestamp == 0.0);
  }
  SUBCASE("row-major layout and implicit timestamps") {
    // Yaw 90 about z with translation (1,2,3), then the same again.
    const std::string line = "0 -1 0 1 1 0 0 2 0 0 1 3\n";
    std::istringstream in2(line + line);
    ParseOptions opts;
    opts.format = TrajectoryFormat::kitti_matrix;
    opts.kitti_rate = 20.0;
    const PoseStream s = parse_trajectory_stream(in2, "mem", opts);
    REQUIRE(s.poses.size() == 2);
    CHECK(s.poses[1].timestamp == doctest::Approx(0.05));
    CHECK((s.poses[0].transform.translation - Vec3(1, 2, 3)).norm() == 0.0);
    CHECK(rotation_angle_between(
              s.poses[0].transform.rotation,
              Rotation::from_axis_angle(Vec3::UnitZ(), M_PI / 2)) < 1e-12);
  }
  SUBCASE("non-orthonormal rotation block is rejected") {
    std::istringstream in("2 0 0 0 0 1 0 0 0 0 1 0\n");
    ParseOptions opts;
    opts.format = TrajectoryFormat::kitti_matrix;
    CHECK_THROWS_AS(parse_trajectory_stream(in, "mem", opts),
                    std::runtime_error);
  }
}

TEST_CASE("ate") {
  oracle::Rng rng(72);
  const PoseStream s = random_stream(rng, 30);

  SUBCASE("stream against itself is zero") {
    CHECK(ate(s, s) < 1e-12);
  }
  SUBCASE("rigidly transformed copy aligns to zero") {
    const Mat4 g = oracle::rigid_mat(rng.unit_quaternion(), rng.vec3(-3, 3));
    PoseStream moved = s;
    for (Pose& p : moved.poses)
      p.transform = oracle::rigid_from_mat(g * p.transform.matrix());
    CHECK(ate(moved, s) < 1e-10);
  }
  SUBCASE("two-point offset instance matches the brute-force alignment") {
    // ref: segment of length 1; est: segment of length 2 (one endpoint off
    // by 1 m). Alignment can rotate/translate est freely.
    PoseStream ref, est;
    for (int k = 0; k < 2; ++k) {
      ref.poses.push_back(
          {double(k), {Rotation::identity(), Vec3(double(k), 0, 0)}});
      est.poses.push_back(
          {double(k), {Rotation::identity(), Vec3(2.0 * k, 0, 0)}});
    }
    // Brute force: random rotations, optimal translation per rotation.
    oracle::Rng search(73);
    double best = 1e18;
    for (int i = 0; i < 200000; ++i) {
      const Mat3 r = search.unit_quaternion().toRotationMatrix();
      const Vec3 pe0 = r * Vec3(0, 0, 0), pe1 = r * Vec3(2, 0, 0);
      const Vec3 centroid_e = 0.5 * (pe0 + pe1);
      const Vec3 t = 0.5 * (Vec3(0, 0, 0) + Vec3(1, 0, 0)) - centroid_e;
      const double rmse = std::sqrt(
          0.5 * ((pe0 + t - Vec3(0, 0, 0)).squaredNorm() +
                 (pe1 + t - Vec3(1, 0, 0)).squaredNorm()));
      best = std::min(best, rmse);
    }
    CHECK(best == doctest::Approx(0.5).epsilon(1e-3));

    // ate() requires 3 points; add the shared midpoint to keep the geometry.
    PoseStream ref3 = ref, est3 = est;
    ref3.poses.insert(ref3.poses.begin() + 1,
                      {0.5, {Rotation::identity(), Vec3(0.5, 0, 0)}});
    est3.poses.insert(est3.poses.begin() + 1,
                      {0.5, {Rotation::identity(), Vec3(1.0, 0, 0)}});
    // Closed form for collinear symmetric sets: residuals (d, 0, d) with
    // d = half the length difference -> rmse = d * sqrt(2/3).
    const double expected = 0.5 * std::sqrt(2.0 / 3.0);
    CHECK(ate(est3, ref3) == doctest::Approx(expected).epsilon(1e-9));
  }
  SUBCASE("fewer than 3 correspondences is an error") {
    PoseStream two;
    two.poses.push_back({0.0, RigidTransform::identity()});
    two.poses.push_back({1.0, RigidTransform::identity()});
    CHECK_THROWS_AS(ate(two, two), std::invalid_argument);
  }
}

TEST_CASE("rpe") {
  oracle::Rng rng(74);
  const PoseStream s = random_stream(rng, 30);

  SUBCASE("identical streams give zero") {
    const auto [t, r] = rpe(s, s, 1);
    CHECK(t < 1e-12);
    CHECK(r < 1e-10);
  }
  SUBCASE("constant forward bias shows up exactly at delta 1") {
    PoseStream ref, est;
    for (int k = 0; k < 20; ++k) {
      ref.poses.push_back(
          {0.1 * k, {Rotation::identity(), Vec3(0.1 * k, 0, 0)}});
      est.poses.push_back(
          {0.1 * k, {Rotation::identity(), Vec3(0.11 * k, 0, 0)}});
    }
    const auto [t, r] = rpe(est, ref, 1);
    CHECK(t == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(r < 1e-10);
  }
  SUBCASE("global frame change leaves rpe untouched") {
    const Mat4 g = oracle::rigid_mat(rng.unit_quaternion(), rng.vec3(-5, 5));
    PoseStream moved = s;
    for (Pose& p : moved.poses)
      p.transform = oracle::rigid_from_mat(g * p.transform.matrix());
    const auto [t, r] = rpe(moved, s, 1);
    CHECK(t < 1e-10);
    CHECK(r < 1e-8);
  }
  SUBCASE("delta beyond length throws") {
    CHECK_THROWS_AS(rpe(s, s, s.poses.size()), std::invalid_argument);
  }
}

TEST_CASE("evaluate") {
  oracle::Rng rng(75);
  SUBCASE("a stream against itself under identity calibration is zero") {
    const PoseStream s = random_stream(rng, 25);
    const SimilarityTransform id;
    const EvalReport report = evaluate(s, s, id, &id);
    CHECK(report.ate_rmse < 1e-12);
    CHECK(report.rpe_rmse_trans < 1e-12);
    CHECK(report.rpe_rmse_rot_deg < 1e-10);
    CHECK(report.calib_translation_error == 0.0);
    CHECK(report.calib_rotation_error_deg == 0.0);
    CHECK(report.scale_error == 0.0);
  }
  SUBCASE("the true calibration maps B onto A for a simulated rig") {
    RigConfig rig;
    rig.true_extrinsic = SimilarityTransform(
        Rotation::from_axis_angle(Vec3(1, 1, 0).normalized(), 0.4),
        Vec3(0.2, -0.3, 0.1), 2.0);
    rig.duration = 20.0;
    const SimulatedRig sim = generate(rig);
    const EvalReport report =
        evaluate(sim.a, sim.b, rig.true_extrinsic, &rig.true_extrinsic);
    CHECK(report.ate_rmse < 1e-9);
    CHECK(report.rpe_rmse_trans < 1e-9);
    // A wrong calibration scores visibly worse.
    const SimilarityTransform wrong(
        rig.true_extrinsic.rotation(),
        rig.true_extrinsic.translation() + Vec3(0.2, 0, 0), 2.0);
    CHECK(evaluate(sim.a, sim.b, wrong).ate_rmse > 0.05);
  }
}
