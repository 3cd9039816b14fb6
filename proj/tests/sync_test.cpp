#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "autocal/sync.hpp"
#include "oracle.hpp"

using namespace autocal;

namespace {

PoseStream stream_from(const std::vector<Mat4>& mats, double t0, double dt,
                       const std::string& id = "s") {
  PoseStream s;
  s.sensor_id = id;
  for (std::size_t k = 0; k < mats.size(); ++k)
    s.poses.push_back({t0 + k * dt, oracle::rigid_from_mat(mats[k])});
  return s;
}

SyncOptions no_drop() {
  SyncOptions opts;
  opts.drop_stationary = false;
  return opts;
}

}  // namespace

TEST_CASE("synchronize on identical grids keeps everything with residual 0") {
  oracle::Rng rng(21);
  const auto mats = oracle::random_trajectory(rng, 20);
  const PoseStream a = stream_from(mats, 0.0, 0.1, "a");
  const PoseStream b = stream_from(mats, 0.0, 0.1, "b");
  const auto samples = synchronize(a, b, no_drop());
  REQUIRE(samples.size() == 20);
  for (const AlignedSample& s : samples) CHECK(s.time_residual == 0.0);
}

TEST_CASE("synchronize drops pairs beyond tolerance") {
  oracle::Rng rng(22);
  const auto mats = oracle::random_trajectory(rng, 10);
  const PoseStream a = stream_from(mats, 0.0, 0.1, "a");
  SyncOptions opts = no_drop();
  opts.tolerance = 0.02;
  // Shift b by twice the tolerance: every nearest-neighbor residual is 0.04.
  const PoseStream b = stream_from(mats, 2 * opts.tolerance, 0.1, "b");
  CHECK(synchronize(a, b, opts).empty());
}

TEST_CASE("interpolation resamples the denser stream exactly") {
  oracle::Rng rng(23);
  // b runs at twice the rate of a over the same span.
  const auto mats_b = oracle::random_trajectory(rng, 41);
  const PoseStream b = stream_from(mats_b, 0.0, 0.05, "b");
  std::vector<Mat4> mats_a(21);
  for (std::size_t k = 0; k < mats_a.size(); ++k) mats_a[k] = mats_b[2 * k];
  const PoseStream a = stream_from(mats_a, 0.0, 0.1, "a");

  SyncOptions opts = no_drop();
  opts.interpolate = true;
  const auto samples = synchronize(a, b, opts);
  CHECK(samples.size() == a.poses.size());
  for (const AlignedSample& s : samples) CHECK(s.time_residual == 0.0);
}

TEST_CASE("interpolated poses hit the midpoint of a pure translation") {
  PoseStream a, b;
  a.sensor_id = "a";
  b.sensor_id = "b";
  a.poses.push_back({0.05, RigidTransform::identity()});
  a.poses.push_back({0.15, RigidTransform::identity()});
  a.poses.push_back({0.25, RigidTransform::identity()});
  for (int k = 0; k <= 3; ++k)
    b.poses.push_back(
        {0.1 * k, {Rotation::identity(), Vec3(double(k), 0, 0)}});
  SyncOptions opts = no_drop();
  opts.interpolate = true;
  const auto samples = synchronize(a, b, opts);
  REQUIRE(samples.size() == 3);
  CHECK((samples[0].pose_b.translation - Vec3(0.5, 0, 0)).norm() < 1e-12);
  CHECK((samples[1].pose_b.translation - Vec3(1.5, 0, 0)).norm() < 1e-12);
}

TEST_CASE("synchronize errors without overlap") {
  oracle::Rng rng(24);
  const auto mats = oracle::random_trajectory(rng, 5);
  const PoseStream a = stream_from(mats, 0.0, 0.1, "a");
  const PoseStream b = stream_from(mats, 100.0, 0.1, "b");
  CHECK_THROWS_AS(synchronize(a, b, no_drop()), std::invalid_argument);
}

TEST_CASE("pair count is symmetric for identical grids") {
  oracle::Rng rng(25);
  const auto mats = oracle::random_trajectory(rng, 15);
  const PoseStream a = stream_from(mats, 0.0, 0.1, "a");
  const PoseStream b = stream_from(mats, 0.0, 0.1, "b");
  CHECK(synchronize(a, b, no_drop()).size() ==
        synchronize(b, a, no_drop()).size());
}

TEST_CASE("stationary samples are dropped before windowing") {
  PoseStream a, b;
  a.sensor_id = "a";
  b.sensor_id = "b";
  for (int k = 0; k < 10; ++k) {
    // No motion at all for the first 5 samples, then 10 cm steps.
    const double x = k < 5 ? 0.0 : 0.1 * (k - 4);
    a.poses.push_back({0.1 * k, {Rotation::identity(), Vec3(x, 0, 0)}});
    b.poses.push_back({0.1 * k, {Rotation::identity(), Vec3(0, x, 0)}});
  }
  SyncOptions opts;
  opts.drop_stationary = true;
  const auto samples = synchronize(a, b, opts);
  CHECK(samples.size() == 6);  // first sample + the 5 moving ones
}

TEST_CASE("rebase") {
  oracle::Rng rng(26);
  SUBCASE("first pose becomes identity, origin keeps the raw pose") {
    const auto mats = oracle::random_trajectory(rng, 8);
    std::vector<Pose> window;
    for (std::size_t k = 0; k < mats.size(); ++k)
      window.push_back({0.1 * k, oracle::rigid_from_mat(mats[k])});
    const PoseSet set = rebase(window);
    CHECK((set.poses.front().matrix() - Mat4::Identity()).norm() < 1e-12);
    CHECK((set.origin.matrix() - mats.front()).norm() < 1e-12);
    // Matrix oracle for the second element: P^-1 * Q.
    const Mat4 expected = mats[0].inverse() * mats[1];
    CHECK((set.poses[1].matrix() - expected).norm() < 1e-10);
  }
  SUBCASE("constant stream rebases to all-identity") {
    const Mat4 pose = oracle::rigid_mat(rng.unit_quaternion(),
                                        rng.vec3(-3, 3));
    std::vector<Pose> window(6, Pose{0.0, oracle::rigid_from_mat(pose)});
    for (std::size_t k = 0; k < window.size(); ++k)
      window[k].timestamp = 0.1 * k;
    for (const RigidTransform& p : rebase(window).poses)
      CHECK((p.matrix() - Mat4::Identity()).norm() < 1e-12);
  }
  SUBCASE("idempotent") {
    const auto mats = oracle::random_trajectory(rng, 8);
    std::vector<Pose> window;
    for (std::size_t k = 0; k < mats.size(); ++k)
      window.push_back({0.1 * k, oracle::rigid_from_mat(mats[k])});
    const PoseSet once = rebase(window);
    std::vector<Pose> again;
    for (std::size_t k = 0; k < once.size(); ++k)
      again.push_back({once.timestamps[k], once.poses[k]});
    const PoseSet twice = rebase(again);
    for (std::size_t k = 0; k < once.size(); ++k)
      CHECK((once.poses[k].matrix() - twice.poses[k].matrix()).norm() <
            1e-12);
  }
}

TEST_CASE("rebasing is invariant to a fixed left world offset") {
  oracle::Rng rng(27);
  const auto mats = oracle::random_trajectory(rng, 30);
  const PoseStream a = stream_from(mats, 0.0, 0.1, "a");
  const PoseStream b = stream_from(mats, 0.0, 0.1, "b");

  const Mat4 offset = oracle::rigid_mat(rng.unit_quaternion(),
                                        rng.vec3(-5, 5));
  std::vector<Mat4> shifted(mats.size());
  for (std::size_t k = 0; k < mats.size(); ++k) shifted[k] = offset * mats[k];
  const PoseStream a2 = stream_from(shifted, 0.0, 0.1, "a");

  const auto w1 = make_windows(synchronize(a, b, no_drop()), 10, 5);
  const auto w2 = make_windows(synchronize(a2, b, no_drop()), 10, 5);
  REQUIRE(w1.size() == w2.size());
  for (std::size_t w = 0; w < w1.size(); ++w)
    for (std::size_t k = 0; k < w1[w].size(); ++k)
      CHECK((w1[w].set_a.poses[k].matrix() -
             w2[w].set_a.poses[k].matrix()).norm() < 1e-10);
}

TEST_CASE("make_windows counts") {
  oracle::Rng rng(28);
  const auto mats = oracle::random_trajectory(rng, 10);
  const PoseStream a = stream_from(mats, 0.0, 0.1, "a");
  const PoseStream b = stream_from(mats, 0.0, 0.1, "b");
  const auto samples = synchronize(a, b, no_drop());
  REQUIRE(samples.size() == 10);

  CHECK(make_windows(samples, 10, 1).size() == 1);
  CHECK(make_windows(samples, 5, 5).size() == 2);
  CHECK(make_windows(samples, 5, 1).size() == 6);  // floor((10-5)/1)+1
  CHECK(make_windows(samples, 11, 1).empty());

  // Disjoint windows rebase independently.
  const auto disjoint = make_windows(samples, 5, 5);
  CHECK((disjoint[1].set_a.poses.front().matrix() - Mat4::Identity())
            .norm() < 1e-12);
  CHECK_THROWS_AS(make_windows(samples, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_windows(samples, 5, 6), std::invalid_argument);
}

TEST_CASE("pose stream validation") {
  PoseStream s;
  s.sensor_id = "x";
  s.poses.push_back({1.0, RigidTransform::identity()});
  s.poses.push_back({1.0, RigidTransform::identity()});
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.poses[1].timestamp = 2.0;
  CHECK_NOTHROW(s.validate());
}
