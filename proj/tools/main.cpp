#include "autocal/baseline.hpp"
#include "autocal/metrics.hpp"
#include "autocal/pipeline.hpp"
#include "autocal/solver.hpp"
#include "autocal/synth.hpp"
#include "autocal/trajectory_io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace autocal;
using nlohmann::json;

namespace {

constexpr const char* kCalibrationSchema = "autocal-calibration/1";
constexpr const char* kReportSchema = "autocal-eval/1";

json transform_to_json(const SimilarityTransform& x) {
  const Eigen::Quaterniond& q = x.rotation().quaternion();
  return json{
      {"rotation",
       {{"qw", q.w()}, {"qx", q.x()}, {"qy", q.y()}, {"qz", q.z()}}},
      {"translation",
       {x.translation().x(), x.translation().y(), x.translation().z()}},
      {"scaled_translation",
       {x.scaled_translation().x(), x.scaled_translation().y(),
        x.scaled_translation().z()}},
      {"scale", x.scale()},
  };
}

SimilarityTransform transform_from_json(const json& j) {
  const json& r = j.at("rotation");
  const Rotation rot(Eigen::Quaterniond(
      r.at("qw").get<double>(), r.at("qx").get<double>(),
      r.at("qy").get<double>(), r.at("qz").get<double>()));
  const json& t = j.at("translation");
  return SimilarityTransform(
      rot,
      Vec3(t.at(0).get<double>(), t.at(1).get<double>(),
           t.at(2).get<double>()),
      j.value("scale", 1.0));
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

void emit_json(const json& j, const std::string& output_path) {
  const std::string text = j.dump(2) + "\n";
  if (output_path.empty())
    std::cout << text;
  else
    write_text(output_path, text);
}

// ---------------------------------------------------------------------------
// shared option blocks

struct TrajectoryArgs {
  std::string path_a, path_b;
  std::string format_a = "tum", format_b = "tum";
  double kitti_rate = 10.0;
};

void add_trajectory_options(CLI::App* cmd, TrajectoryArgs& args) {
  cmd->add_option("--traj-a", args.path_a, "First sensor trajectory file")
      ->required();
  cmd->add_option("--traj-b", args.path_b, "Second sensor trajectory file")
      ->required();
  cmd->add_option("--format-a", args.format_a, "tum or kitti_matrix");
  cmd->add_option("--format-b", args.format_b, "tum or kitti_matrix");
  cmd->add_option("--kitti-rate", args.kitti_rate,
                  "Sample rate assumed for kitti_matrix timestamps");
}

PoseStream load_trajectory(const std::string& path, const std::string& format,
                           double kitti_rate, const std::string& id) {
  ParseOptions opts;
  opts.format = trajectory_format_from_string(format);
  opts.kitti_rate = kitti_rate;
  opts.sensor_id = id;
  std::vector<std::string> warnings;
  PoseStream stream = parse_trajectory(path, opts, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  stream.validate();
  return stream;
}

struct PipelineArgs {
  std::size_t window_length = 50;
  std::size_t stride = 10;
  double sync_tolerance = 0.02;
  bool interpolate = false;
  bool keep_stationary = false;
  PipelineOptions pipeline;
  std::string prior_path;
  double measured_distance = -1.0;
  bool final_refine = false;
};

void add_pipeline_options(CLI::App* cmd, PipelineArgs& args) {
  cmd->add_option("--window-length", args.window_length,
                  "Pose pairs per calibration window");
  cmd->add_option("--stride", args.stride, "Pairs between window starts");
  cmd->add_option("--sync-tolerance", args.sync_tolerance,
                  "Max pairing time difference, seconds");
  cmd->add_flag("--interpolate", args.interpolate,
                "Resample the denser stream at the sparser timestamps");
  cmd->add_flag("--keep-stationary", args.keep_stationary,
                "Do not drop stationary samples before windowing");
  cmd->add_flag("--fix-scale", args.pipeline.solver_options.fix_scale,
                "Assume both streams share one unit (scale pinned at 1)");
  cmd->add_option("--alpha", args.pipeline.solver_options.regularizer_weight,
                  "Weight of the measured-distance regularizer");
  cmd->add_option("--measured-distance", args.measured_distance,
                  "Tape-measured sensor distance, first-sensor units");
  cmd->add_option("--prior", args.prior_path,
                  "Previous calibration JSON used as the initial guess");
  cmd->add_option("--max-iterations",
                  args.pipeline.solver_options.max_iterations,
                  "Levenberg-Marquardt iteration cap");
  cmd->add_option("--convergence-tol",
                  args.pipeline.solver_options.convergence_tol,
                  "Relative objective decrease treated as converged");
  cmd->add_option("--damping-init", args.pipeline.solver_options.damping_init,
                  "Initial Levenberg-Marquardt damping");
  cmd->add_option("--min-eigen-ratio", args.pipeline.min_eigen_ratio,
                  "Minimum second/first position eigenvalue ratio");
  cmd->add_option("--min-total-rotation", args.pipeline.min_total_rotation_deg,
                  "Minimum summed rotation per window, degrees");
  cmd->add_option("--cost-threshold", args.pipeline.cost_threshold,
                  "Early rejection cost per pose pair");
  cmd->add_option("--ransac-iterations", args.pipeline.ransac_iterations,
                  "Maximum RANSAC hypotheses per step");
  cmd->add_option("--ransac-translation-inlier",
                  args.pipeline.ransac_translation_inlier,
                  "RANSAC translation agreement band, meters");
  cmd->add_option("--ransac-rotation-inlier",
                  args.pipeline.ransac_rotation_inlier_deg,
                  "RANSAC rotation agreement band, degrees");
  cmd->add_option("--ransac-scale-inlier", args.pipeline.ransac_scale_inlier,
                  "RANSAC relative scale band (scale solving only)");
  cmd->add_option("--history-capacity", args.pipeline.history_capacity,
                  "Window estimates kept for consensus");
  cmd->add_option("--seed", args.pipeline.seed, "RANSAC sampling seed");
  cmd->add_flag("--final-refine", args.final_refine,
                "Re-solve once over all inlier windows pooled");
}

PipelineOptions finalize_pipeline_options(PipelineArgs& args) {
  PipelineOptions opts = args.pipeline;
  if (args.measured_distance >= 0.0)
    opts.solver_options.measured_distance = args.measured_distance;
  if (!args.prior_path.empty())
    opts.solver_options.initial_guess =
        transform_from_json(load_json(args.prior_path));
  return opts;
}

SyncOptions sync_options(const PipelineArgs& args) {
  SyncOptions opts;
  opts.tolerance = args.sync_tolerance;
  opts.interpolate = args.interpolate;
  opts.drop_stationary = !args.keep_stationary;
  return opts;
}

// ---------------------------------------------------------------------------
// reporting

json state_to_json(const CalibrationState& state, bool fix_scale) {
  json j = transform_to_json(state.consolidated);
  j["schema"] = kCalibrationSchema;
  j["fix_scale"] = fix_scale;
  j["observable_axes"] = {{"x", state.observable_axes[0]},
                          {"y", state.observable_axes[1]},
                          {"z", state.observable_axes[2]}};
  j["inlier_count"] = state.inlier_count;
  j["windows_processed"] = state.windows_processed;
  std::size_t insufficient = 0, high_cost = 0, outliers = 0;
  for (const WindowEstimate& w : state.window_history) {
    switch (w.rejection_reason) {
      case RejectionReason::insufficient_motion: ++insufficient; break;
      case RejectionReason::high_cost: ++high_cost; break;
      case RejectionReason::ransac_outlier: ++outliers; break;
      case RejectionReason::none: break;
    }
  }
  j["rejections"] = {{"insufficient_motion", insufficient},
                     {"high_cost", high_cost},
                     {"ransac_outlier", outliers}};
  json history = json::array();
  for (const ScaleSample& s : state.scale_history)
    history.push_back({s.timestamp, s.scale});
  j["scale_history"] = std::move(history);
  return j;
}

void write_window_csv(const std::string& path, const CalibrationState& state) {
  std::ostringstream out;
  out << "index,start_time,end_time,pairs,solved,cost,cost_per_pair,"
         "accepted,reason,qw,qx,qy,qz,tx,ty,tz,scale,"
         "pos_eig1,pos_eig2,pos_eig3,rot_eig1,rot_eig2,rot_eig3,"
         "total_rotation_deg,stationary,obs_x,obs_y,obs_z\n";
  char buf[640];
  for (const WindowEstimate& w : state.window_history) {
    const Eigen::Quaterniond& q = w.estimate.rotation().quaternion();
    const Vec3& t = w.estimate.translation();
    const MotionDiagnostics& d = w.diagnostics;
    std::snprintf(
        buf, sizeof(buf),
        "%zu,%.9g,%.9g,%zu,%d,%.9g,%.9g,%d,%s,"
        "%.12g,%.12g,%.12g,%.12g,%.9g,%.9g,%.9g,%.9g,"
        "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%d,%d,%d\n",
        w.index, w.start_time, w.end_time, w.pair_count, int(w.solved),
        w.cost, w.cost_per_pair, int(w.accepted),
        to_string(w.rejection_reason).c_str(), q.w(), q.x(), q.y(), q.z(),
        t.x(), t.y(), t.z(), w.estimate.scale(), d.position_eigenvalues[0],
        d.position_eigenvalues[1], d.position_eigenvalues[2],
        d.rotation_axis_eigenvalues[0], d.rotation_axis_eigenvalues[1],
        d.rotation_axis_eigenvalues[2], d.total_rotation_deg,
        int(d.stationary), int(w.observable_axes[0]),
        int(w.observable_axes[1]), int(w.observable_axes[2]));
    out << buf;
  }
  write_text(path, out.str());
}

// ---------------------------------------------------------------------------
// subcommands

int run_calibrate(const TrajectoryArgs& traj, PipelineArgs& args,
                  const std::string& output, const std::string& window_csv) {
  const PoseStream a =
      load_trajectory(traj.path_a, traj.format_a, traj.kitti_rate, "a");
  const PoseStream b =
      load_trajectory(traj.path_b, traj.format_b, traj.kitti_rate, "b");
  const PipelineOptions opts = finalize_pipeline_options(args);

  const std::vector<AlignedSample> samples =
      synchronize(a, b, sync_options(args));
  const std::vector<SyncedPair> windows =
      make_windows(samples, args.window_length, args.stride);
  if (windows.empty())
    throw std::runtime_error("not enough synchronized samples for a window");

  CalibrationState state = make_initial_state(opts);
  for (const SyncedPair& w : windows) state = step(std::move(state), w, opts);

  json result = state_to_json(state, opts.solver_options.fix_scale);
  if (args.final_refine && state.inlier_count > 0) {
    std::vector<SyncedPair> inlier_windows;
    for (const WindowEstimate& w : state.window_history)
      if (w.accepted) inlier_windows.push_back(windows[w.index]);
    SolverOptions refine_opts = opts.solver_options;
    refine_opts.initial_guess = state.consolidated;
    const SolveResult refined = solve_pooled(inlier_windows, refine_opts);
    result["consolidated"] = transform_to_json(state.consolidated);
    result.update(transform_to_json(refined.estimate));
    result["refined"] = true;
    result["refine_converged"] = refined.converged;
  }

  if (!window_csv.empty()) write_window_csv(window_csv, state);
  emit_json(result, output);
  return 0;
}

int run_stream(PipelineArgs& args, std::istream& in, std::ostream& out) {
  const PipelineOptions opts = finalize_pipeline_options(args);
  const SyncOptions sopts = sync_options(args);

  std::deque<AlignedSample> buffer;
  std::size_t base_index = 0;  // stream index of buffer.front()
  std::size_t next_start = 0;  // stream index of the next window start
  CalibrationState state = make_initial_state(opts);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<double> f;
    double v;
    while (ss >> v) f.push_back(v);
    if (f.size() != 15)
      throw std::runtime_error("stdin:" + std::to_string(line_no) +
                               ": expected 15 fields (t, a pose, b pose)");
    AlignedSample s;
    s.timestamp = f[0];
    s.pose_a = {Rotation(Eigen::Quaterniond(f[7], f[4], f[5], f[6])),
                Vec3(f[1], f[2], f[3])};
    s.pose_b = {Rotation(Eigen::Quaterniond(f[14], f[11], f[12], f[13])),
                Vec3(f[8], f[9], f[10])};

    if (sopts.drop_stationary && !buffer.empty()) {
      const AlignedSample& prev = buffer.back();
      const bool still =
          (s.pose_a.translation - prev.pose_a.translation).norm() <
              sopts.stationary_translation &&
          (s.pose_b.translation - prev.pose_b.translation).norm() <
              sopts.stationary_translation &&
          rotation_angle_between(s.pose_a.rotation, prev.pose_a.rotation) <
              sopts.stationary_rotation_deg &&
          rotation_angle_between(s.pose_b.rotation, prev.pose_b.rotation) <
              sopts.stationary_rotation_deg;
      if (still) continue;
    }
    buffer.push_back(s);

    const std::size_t have = base_index + buffer.size();
    if (have < next_start + args.window_length) continue;

    const std::vector<AlignedSample> window(
        buffer.begin() + long(next_start - base_index),
        buffer.begin() + long(next_start - base_index + args.window_length));
    const std::vector<SyncedPair> pairs =
        make_windows(window, args.window_length, args.window_length);
    state = step(std::move(state), pairs.front(), opts);
    next_start += args.stride;
    while (base_index < next_start && !buffer.empty()) {
      buffer.pop_front();
      ++base_index;
    }

    const WindowEstimate& w = state.window_history.back();
    const json update = {
        {"window", w.index},
        {"accepted", w.accepted},
        {"reason", to_string(w.rejection_reason)},
        {"estimate", transform_to_json(w.estimate)},
        {"consolidated", transform_to_json(state.consolidated)},
        {"inlier_count", state.inlier_count},
        {"observable_axes",
         {{"x", state.observable_axes[0]},
          {"y", state.observable_axes[1]},
          {"z", state.observable_axes[2]}}},
    };
    out << update.dump() << "\n" << std::flush;
  }
  return 0;
}

int run_simulate(const RigConfig& rig, const NoiseModel& noise_a,
                 const NoiseModel& noise_b, const std::string& out_dir) {
  const SimulatedRig sim = generate(rig, noise_a, noise_b);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_trajectory_tum(sim.a, dir / "a.tum");
  write_trajectory_tum(sim.b, dir / "b.tum");
  write_trajectory_tum(sim.truth.clean_b_metric, dir / "b_metric.tum");

  json truth = transform_to_json(sim.truth.extrinsic);
  truth["schema"] = kCalibrationSchema;
  json history = json::array();
  for (const ScaleSample& s : sim.truth.scale_series)
    history.push_back({s.timestamp, s.scale});
  truth["scale_history"] = std::move(history);
  emit_json(truth, (dir / "truth.json").string());
  std::cerr << "wrote a.tum, b.tum, b_metric.tum, truth.json to " << out_dir
            << "\n";
  return 0;
}

int run_evaluate(const TrajectoryArgs& traj, const std::string& calib_path,
                 const std::string& truth_path, std::size_t rpe_delta,
                 const std::string& output) {
  const PoseStream a =
      load_trajectory(traj.path_a, traj.format_a, traj.kitti_rate, "a");
  const PoseStream b =
      load_trajectory(traj.path_b, traj.format_b, traj.kitti_rate, "b");

  SimilarityTransform estimate;
  if (!calib_path.empty()) estimate = transform_from_json(load_json(calib_path));
  std::optional<SimilarityTransform> truth;
  if (!truth_path.empty()) truth = transform_from_json(load_json(truth_path));

  const EvalReport report =
      evaluate(a, b, estimate, truth ? &*truth : nullptr, rpe_delta);
  json j = {
      {"schema", kReportSchema},
      {"ate_rmse", report.ate_rmse},
      {"rpe_rmse_trans", report.rpe_rmse_trans},
      {"rpe_rmse_rot_deg", report.rpe_rmse_rot_deg},
  };
  if (truth) {
    j["calib_translation_error"] = report.calib_translation_error;
    j["calib_rotation_error_deg"] = report.calib_rotation_error_deg;
    j["scale_error"] = report.scale_error;
  }
  emit_json(j, output);
  return 0;
}

int run_rescale(const std::string& input, const std::string& calib_path,
                double constant_scale, const std::string& output) {
  const PoseStream stream = load_trajectory(input, "tum", 10.0, "b");
  std::vector<ScaleSample> history;
  if (!calib_path.empty()) {
    const json j = load_json(calib_path);
    for (const json& entry : j.at("scale_history"))
      history.push_back({entry.at(0).get<double>(), entry.at(1).get<double>()});
    if (history.empty() && j.contains("scale"))
      history.push_back({0.0, j.at("scale").get<double>()});
  } else if (constant_scale > 0.0) {
    history.push_back({0.0, constant_scale});
  }
  write_trajectory_tum(rescale_trajectory(stream, history), output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Online scaled hand-eye extrinsic calibration from pose streams"};
  app.require_subcommand(1);

  // calibrate ---------------------------------------------------------------
  auto* calibrate = app.add_subcommand(
      "calibrate", "Estimate the extrinsic transform from two trajectories");
  calibrate->set_config("--config");
  TrajectoryArgs cal_traj;
  PipelineArgs cal_args;
  std::string cal_output, cal_csv;
  add_trajectory_options(calibrate, cal_traj);
  add_pipeline_options(calibrate, cal_args);
  calibrate->add_option("--output", cal_output,
                        "Calibration JSON path (default: stdout)");
  calibrate->add_option("--window-csv", cal_csv,
                        "Per-window diagnostics CSV path");

  // stream ------------------------------------------------------------------
  auto* stream_cmd = app.add_subcommand(
      "stream",
      "Read synchronized pose pairs from stdin, emit JSON updates per window");
  stream_cmd->set_config("--config");
  PipelineArgs stream_args;
  add_pipeline_options(stream_cmd, stream_args);

  // simulate ----------------------------------------------------------------
  auto* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic rig with known ground truth");
  RigConfig rig;
  NoiseModel noise_a, noise_b;
  std::string profile = "rich_6dof", out_dir = "sim";
  std::vector<double> extrinsic;  // tx ty tz qx qy qz qw
  double true_scale = 1.0;
  std::uint64_t sim_seed = 0;
  simulate->add_option(
      "--profile", profile,
      "rich_6dof|planar_vehicle|straight_line|stationary|handheld");
  simulate->add_option("--duration", rig.duration, "Seconds");
  simulate->add_option("--rate", rig.rate, "Hz");
  simulate
      ->add_option("--extrinsic", extrinsic,
                   "True extrinsic as tx ty tz qx qy qz qw")
      ->expected(7);
  simulate->add_option("--scale", true_scale,
                       "True unit ratio (first-sensor per second-sensor)");
  simulate->add_option("--seed", sim_seed, "Base noise seed");
  simulate->add_option("--noise-a-translation", noise_a.translation_sigma,
                       "Stream A translation sigma per pose, meters");
  simulate->add_option("--noise-a-rotation", noise_a.rotation_sigma_deg,
                       "Stream A rotation sigma per pose, degrees");
  simulate->add_option("--noise-a-drift", noise_a.drift_rate,
                       "Stream A translation drift, m/s");
  simulate->add_option("--noise-b-translation", noise_b.translation_sigma,
                       "Stream B translation sigma per pose, meters");
  simulate->add_option("--noise-b-rotation", noise_b.rotation_sigma_deg,
                       "Stream B rotation sigma per pose, degrees");
  simulate->add_option("--noise-b-drift", noise_b.drift_rate,
                       "Stream B translation drift, m/s");
  simulate->add_option("--noise-b-scale-drift", noise_b.scale_drift,
                       "Stream B unit drift per second");
  simulate->add_option("--discontinuity-probability",
                       noise_b.discontinuity_probability,
                       "Stream B jump probability per 50-sample span");
  simulate->add_option("--discontinuity-magnitude",
                       noise_b.discontinuity_magnitude,
                       "Stream B jump size, meters");
  simulate->add_option("--out-dir", out_dir, "Output directory");

  // evaluate ----------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand(
      "evaluate", "Score a calibration against trajectories / ground truth");
  TrajectoryArgs eval_traj;
  std::string eval_calib, eval_truth, eval_output;
  std::size_t rpe_delta = 1;
  add_trajectory_options(eval_cmd, eval_traj);
  eval_cmd->add_option("--calib", eval_calib,
                       "Calibration JSON (default: identity)");
  eval_cmd->add_option("--truth", eval_truth, "Ground-truth calibration JSON");
  eval_cmd->add_option("--rpe-delta", rpe_delta, "RPE step, in poses");
  eval_cmd->add_option("--output", eval_output,
                       "Report JSON path (default: stdout)");

  // rescale -----------------------------------------------------------------
  auto* rescale_cmd = app.add_subcommand(
      "rescale", "Apply a scale history to a trajectory's increments");
  std::string rescale_input, rescale_calib, rescale_output;
  double rescale_constant = -1.0;
  rescale_cmd
      ->add_option("--input", rescale_input, "TUM trajectory to rescale")
      ->required();
  rescale_cmd->add_option("--calib", rescale_calib,
                          "Calibration JSON holding the scale history");
  rescale_cmd->add_option("--scale", rescale_constant,
                          "Constant scale instead of a calibration file");
  rescale_cmd->add_option("--output", rescale_output, "Output TUM path")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (calibrate->parsed())
      return run_calibrate(cal_traj, cal_args, cal_output, cal_csv);
    if (stream_cmd->parsed())
      return run_stream(stream_args, std::cin, std::cout);
    if (simulate->parsed()) {
      rig.profile = motion_profile_from_string(profile);
      Rotation rot = Rotation::from_axis_angle(Vec3(0.3, -0.2, 1.0).normalized(),
                                               0.5);
      Vec3 trans(0.2, -0.1, 0.15);
      if (!extrinsic.empty()) {
        trans = Vec3(extrinsic[0], extrinsic[1], extrinsic[2]);
        rot = Rotation(Eigen::Quaterniond(extrinsic[6], extrinsic[3],
                                          extrinsic[4], extrinsic[5]));
      }
      rig.true_extrinsic = SimilarityTransform(rot, trans, true_scale);
      noise_a.seed = sim_seed;
      noise_b.seed = sim_seed + 1;
      return run_simulate(rig, noise_a, noise_b, out_dir);
    }
    if (eval_cmd->parsed())
      return run_evaluate(eval_traj, eval_calib, eval_truth, rpe_delta,
                          eval_output);
    if (rescale_cmd->parsed()) {
      if (rescale_calib.empty() && rescale_constant <= 0.0)
        throw std::runtime_error("rescale needs --calib or --scale");
      return run_rescale(rescale_input, rescale_calib, rescale_constant,
                         rescale_output);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
