#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = AUTOCAL_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("autocal_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

int run(const std::string& args) {
  const int status = std::system((kCli + " " + args).c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const std::string& path) { return json::parse(slurp(path)); }

}  // namespace

TEST_CASE("usage errors exit with 1, missing data with 2") {
  CHECK(run("--help > /dev/null 2>&1") == 0);
  CHECK(run("frobnicate > /dev/null 2>&1") == 1);
  CHECK(run("calibrate > /dev/null 2>&1") == 1);  // missing required options
  CHECK(run("calibrate --traj-a /nonexistent.tum --traj-b /nonexistent.tum "
            "> /dev/null 2>&1") == 2);
}

TEST_CASE("simulate then calibrate recovers the truth end to end") {
  TempDir tmp;
  REQUIRE(run("simulate --profile rich_6dof --duration 30 --scale 2 "
              "--extrinsic 0.3 -0.1 0.5 0.1 -0.05 0.2 0.97 --out-dir " +
              tmp.file("sim") + " 2> /dev/null") == 0);
  REQUIRE(run("calibrate --traj-a " + tmp.file("sim/a.tum") + " --traj-b " +
              tmp.file("sim/b.tum") + " --output " + tmp.file("calib.json") +
              " --window-csv " + tmp.file("windows.csv") +
              " 2> /dev/null") == 0);

  const json calib = load(tmp.file("calib.json"));
  const json truth = load(tmp.file("sim/truth.json"));
  CHECK(calib.at("schema") == "autocal-calibration/1");
  CHECK(std::abs(calib.at("scale").get<double>() - 2.0) < 1e-6);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(calib.at("scaled_translation").at(i).get<double>() -
                   truth.at("scaled_translation").at(i).get<double>()) <
          1e-6);

  // The window CSV parses and has one line per processed window.
  std::istringstream csv(slurp(tmp.file("windows.csv")));
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("index,start_time", 0) == 0);
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == calib.at("windows_processed").get<std::size_t>());

  // evaluate with the estimated calibration: small trajectory error,
  // near-zero calibration error against the truth file.
  REQUIRE(run("evaluate --traj-a " + tmp.file("sim/a.tum") + " --traj-b " +
              tmp.file("sim/b.tum") + " --calib " + tmp.file("calib.json") +
              " --truth " + tmp.file("sim/truth.json") + " --output " +
              tmp.file("report.json") + " 2> /dev/null") == 0);
  const json report = load(tmp.file("report.json"));
  CHECK(report.at("ate_rmse").get<double>() < 1e-5);
  CHECK(report.at("calib_translation_error").get<double>() < 1e-6);
  CHECK(report.at("scale_error").get<double>() < 1e-7);
}

TEST_CASE("evaluate of a trajectory against itself is all zeros") {
  TempDir tmp;
  REQUIRE(run("simulate --duration 10 --out-dir " + tmp.file("sim") +
              " 2> /dev/null") == 0);
  REQUIRE(run("evaluate --traj-a " + tmp.file("sim/a.tum") + " --traj-b " +
              tmp.file("sim/a.tum") + " --output " + tmp.file("report.json") +
              " 2> /dev/null") == 0);
  const json report = load(tmp.file("report.json"));
  CHECK(report.at("ate_rmse").get<double>() < 1e-12);
  CHECK(report.at("rpe_rmse_trans").get<double>() < 1e-12);
  CHECK(report.at("rpe_rmse_rot_deg").get<double>() < 1e-10);
}

TEST_CASE("calibrate output is byte-identical across runs at a fixed seed") {
  TempDir tmp;
  REQUIRE(run("simulate --duration 20 --seed 4 --noise-b-translation 0.003 "
              "--noise-b-rotation 0.05 --out-dir " +
              tmp.file("sim") + " 2> /dev/null") == 0);
  const std::string common = "calibrate --traj-a " + tmp.file("sim/a.tum") +
                             " --traj-b " + tmp.file("sim/b.tum") +
                             " --seed 9 --output ";
  REQUIRE(run(common + tmp.file("c1.json") + " 2> /dev/null") == 0);
  REQUIRE(run(common + tmp.file("c2.json") + " 2> /dev/null") == 0);
  CHECK(slurp(tmp.file("c1.json")) == slurp(tmp.file("c2.json")));
}

TEST_CASE("planar simulation flags the vertical axis unobservable") {
  TempDir tmp;
  REQUIRE(run("simulate --profile planar_vehicle --duration 60 --out-dir " +
              tmp.file("sim") + " 2> /dev/null") == 0);
  REQUIRE(run("calibrate --traj-a " + tmp.file("sim/a.tum") + " --traj-b " +
              tmp.file("sim/b.tum") + " --fix-scale --output " +
              tmp.file("calib.json") + " 2> /dev/null") == 0);
  const json calib = load(tmp.file("calib.json"));
  CHECK(calib.at("observable_axes").at("x").get<bool>());
  CHECK(calib.at("observable_axes").at("y").get<bool>());
  CHECK_FALSE(calib.at("observable_axes").at("z").get<bool>());
}

TEST_CASE("stream mode emits one JSON update per window") {
  TempDir tmp;
  REQUIRE(run("simulate --duration 12 --out-dir " + tmp.file("sim") +
              " 2> /dev/null") == 0);
  // Build the 15-field stdin lines from the generated pair.
  std::istringstream a_in(slurp(tmp.file("sim/a.tum")));
  std::istringstream b_in(slurp(tmp.file("sim/b.tum")));
  std::ofstream feed(tmp.file("feed.txt"));
  std::string la, lb;
  while (std::getline(a_in, la) && std::getline(b_in, lb)) {
    std::istringstream sa(la), sb(lb);
    double ta, ax, ay, az, aqx, aqy, aqz, aqw;
    double tb, bx, by, bz, bqx, bqy, bqz, bqw;
    sa >> ta >> ax >> ay >> az >> aqx >> aqy >> aqz >> aqw;
    sb >> tb >> bx >> by >> bz >> bqx >> bqy >> bqz >> bqw;
    feed << ta << " " << ax << " " << ay << " " << az << " " << aqx << " "
         << aqy << " " << aqz << " " << aqw << " " << bx << " " << by << " "
         << bz << " " << bqx << " " << bqy << " " << bqz << " " << bqw
         << "\n";
  }
  feed.close();

  const int status = std::system(
      (kCli + " stream --window-length 50 --stride 10 < " +
       tmp.file("feed.txt") + " > " + tmp.file("updates.jsonl") +
       " 2> /dev/null")
          .c_str());
  REQUIRE(WEXITSTATUS(status) == 0);

  std::istringstream updates(slurp(tmp.file("updates.jsonl")));
  std::size_t count = 0;
  json last;
  for (std::string line; std::getline(updates, line);) {
    last = json::parse(line);  // every line must be valid JSON
    ++count;
  }
  CHECK(count == 8);  // floor((121-50)/10)+1
  CHECK(last.at("window").get<std::size_t>() == count - 1);
  CHECK(last.at("consolidated").contains("scale"));
}

TEST_CASE("rescale applies the calibration's scale history") {
  TempDir tmp;
  REQUIRE(run("simulate --duration 30 --scale 2 --out-dir " + tmp.file("sim") +
              " 2> /dev/null") == 0);
  REQUIRE(run("calibrate --traj-a " + tmp.file("sim/a.tum") + " --traj-b " +
              tmp.file("sim/b.tum") + " --output " + tmp.file("calib.json") +
              " 2> /dev/null") == 0);
  REQUIRE(run("rescale --input " + tmp.file("sim/b.tum") + " --calib " +
              tmp.file("calib.json") + " --output " + tmp.file("b_fixed.tum") +
              " 2> /dev/null") == 0);
  // After rescaling, B's path length matches the metric ground truth.
  auto path_length = [](const std::string& file) {
    std::istringstream in(slurp(file));
    double t, x, y, z, qx, qy, qz, qw, px = 0, py = 0, pz = 0, total = 0;
    bool first = true;
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ss(line);
      ss >> t >> x >> y >> z >> qx >> qy >> qz >> qw;
      if (!first)
        total += std::sqrt((x - px) * (x - px) + (y - py) * (y - py) +
                           (z - pz) * (z - pz));
      px = x; py = y; pz = z;
      first = false;
    }
    return total;
  };
  const double fixed_len = path_length(tmp.file("b_fixed.tum"));
  const double metric_len = path_length(tmp.file("sim/b_metric.tum"));
  const double raw_len = path_length(tmp.file("sim/b.tum"));
  CHECK(std::abs(fixed_len / metric_len - 1.0) < 1e-6);
  CHECK(std::abs(raw_len / metric_len - 0.5) < 1e-6);  // scale-2 shrinks raw
}

TEST_CASE("config file values are applied and overridden by flags") {
  TempDir tmp;
  REQUIRE(run("simulate --duration 20 --out-dir " + tmp.file("sim") +
              " 2> /dev/null") == 0);
  {
    std::ofstream cfg(tmp.file("pipeline.cfg"));
    cfg << "window-length=40\nstride=20\nfix-scale=true\n";
  }
  REQUIRE(run("calibrate --config " + tmp.file("pipeline.cfg") +
              " --traj-a " + tmp.file("sim/a.tum") + " --traj-b " +
              tmp.file("sim/b.tum") + " --output " + tmp.file("c1.json") +
              " 2> /dev/null") == 0);
  const json c1 = load(tmp.file("c1.json"));
  CHECK(c1.at("fix_scale").get<bool>());
  CHECK(c1.at("windows_processed").get<std::size_t>() == 9);  // (201-40)/20+1

  // A flag on the command line wins over the config file.
  REQUIRE(run("calibrate --config " + tmp.file("pipeline.cfg") +
              " --stride 40 --traj-a " + tmp.file("sim/a.tum") +
              " --traj-b " + tmp.file("sim/b.tum") + " --output " +
              tmp.file("c2.json") + " 2> /dev/null") == 0);
  CHECK(load(tmp.file("c2.json")).at("windows_processed").get<std::size_t>() ==
        5);  // (201-40)/40+1
}
