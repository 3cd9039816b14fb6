#include "autocal/pipeline.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace autocal {

std::string to_string(RejectionReason reason) {
  switch (reason) {
    case RejectionReason::none: return "none";
    case RejectionReason::insufficient_motion: return "insufficient_motion";
    case RejectionReason::high_cost: return "high_cost";
    case RejectionReason::ransac_outlier: return "ransac_outlier";
  }
  return "unknown";
}

CalibrationState make_initial_state(const PipelineOptions& opts) {
  CalibrationState state;
  state.consolidated = opts.solver_options.initial_guess;
  return state;
}

MotionDiagnostics diagnose_motion(const SyncedPair& pair) {
  if (pair.size() == 0)
    throw std::invalid_argument("cannot diagnose an empty window");
  MotionDiagnostics d;

  const std::vector<RigidTransform>& poses = pair.set_a.poses;
  const std::size_t n = poses.size();

  Vec3 mean = Vec3::Zero();
  for (const RigidTransform& p : poses) mean += p.translation;
  mean /= double(n);
  Mat3 cov = Mat3::Zero();
  double max_disp = 0.0;
  for (const RigidTransform& p : poses) {
    const Vec3 c = p.translation - mean;
    cov += c * c.transpose();
    max_disp = std::max(max_disp, p.translation.norm());
  }
  cov /= double(n);

  Mat3 second_moment = Mat3::Zero();
  double total_rotation_rad = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const Rotation inc = poses[k].rotation.inverse() * poses[k + 1].rotation;
    const Vec3 v = inc.rotation_vector();
    second_moment += v * v.transpose();
    total_rotation_rad += v.norm();
  }
  if (n > 1) second_moment /= double(n - 1);

  Eigen::SelfAdjointEigenSolver<Mat3> pos_eig(cov);
  Eigen::SelfAdjointEigenSolver<Mat3> rot_eig(second_moment);
  // Eigen reports ascending order; flip to descending.
  for (int i = 0; i < 3; ++i) {
    d.position_eigenvalues[i] = std::max(0.0, pos_eig.eigenvalues()[2 - i]);
    d.rotation_axis_eigenvalues[i] =
        std::max(0.0, rot_eig.eigenvalues()[2 - i]);
    d.rotation_axis_vectors.col(i) = rot_eig.eigenvectors().col(2 - i);
  }
  d.total_rotation_deg = total_rotation_rad * 180.0 / M_PI;
  d.stationary = max_disp < 1e-3 && d.total_rotation_deg < 0.01;
  return d;
}

GateResult gate(const MotionDiagnostics& d, const PipelineOptions& opts) {
  GateResult result;

  int excited = 0;
  for (int i = 0; i < 3; ++i) {
    const double floor = std::max(opts.axis_excitation_floor,
                                  0.01 * d.rotation_axis_eigenvalues[0]);
    if (d.rotation_axis_eigenvalues[i] >= floor) ++excited;
  }
  if (excited >= 2) {
    result.observable_axes = {true, true, true};
  } else if (excited == 1) {
    // A single excited rotation axis leaves the translation component along
    // it undetermined.
    const Vec3 axis = d.rotation_axis_vectors.col(0);
    for (int j = 0; j < 3; ++j)
      result.observable_axes[j] = std::abs(axis[j]) < 0.9;
  }

  if (d.stationary) return result;
  if (d.total_rotation_deg < opts.min_total_rotation_deg) return result;
  const double ratio =
      d.position_eigenvalues[0] > 0.0
          ? d.position_eigenvalues[1] / d.position_eigenvalues[0]
          : 0.0;
  if (ratio < opts.min_eigen_ratio) return result;

  result.accepted = true;
  return result;
}

bool early_reject_pass(double cost_per_pair, const PipelineOptions& opts) {
  return cost_per_pair <= opts.cost_threshold;
}

namespace {

double translation_distance(const WindowEstimate& a, const WindowEstimate& b) {
  return (a.estimate.scaled_translation() - b.estimate.scaled_translation())
      .norm();
}

bool agrees(const WindowEstimate& candidate, const WindowEstimate& hypothesis,
            const PipelineOptions& opts) {
  if (translation_distance(candidate, hypothesis) >
      opts.ransac_translation_inlier)
    return false;
  if (rotation_angle_between(candidate.estimate.rotation(),
                             hypothesis.estimate.rotation()) >
      opts.ransac_rotation_inlier_deg)
    return false;
  if (!opts.solver_options.fix_scale) {
    const double rel =
        std::abs(candidate.estimate.scale() / hypothesis.estimate.scale() -
                 1.0);
    if (rel > opts.ransac_scale_inlier) return false;
  }
  return true;
}

}  // namespace

std::vector<std::size_t> ransac_filter(
    const std::vector<const WindowEstimate*>& candidates,
    const PipelineOptions& opts) {
  if (candidates.empty()) return {};

  std::vector<std::size_t> hypotheses(candidates.size());
  std::iota(hypotheses.begin(), hypotheses.end(), 0);
  if (candidates.size() > std::size_t(std::max(opts.ransac_iterations, 1))) {
    std::mt19937_64 rng(opts.seed);
    std::shuffle(hypotheses.begin(), hypotheses.end(), rng);
    hypotheses.resize(std::size_t(opts.ransac_iterations));
    std::sort(hypotheses.begin(), hypotheses.end());  // first-seen tie-break
  }

  std::vector<std::size_t> best;
  double best_residual = 0.0;
  for (std::size_t h : hypotheses) {
    std::vector<std::size_t> inliers;
    double residual = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (agrees(*candidates[i], *candidates[h], opts)) {
        inliers.push_back(i);
        residual += translation_distance(*candidates[i], *candidates[h]);
      }
    }
    const bool better =
        inliers.size() > best.size() ||
        (inliers.size() == best.size() && !best.empty() &&
         residual < best_residual - 1e-15);
    if (better) {
      best = std::move(inliers);
      best_residual = residual;
    }
  }
  return best;
}

ConsolidateResult consolidate(const std::vector<const WindowEstimate*>& inliers,
                              const SimilarityTransform& prior,
                              const PipelineOptions& opts) {
  if (inliers.empty()) return {prior, false};

  // The regularizer informs translation axes the motion alone cannot.
  const bool regularized = opts.solver_options.regularizer_weight > 0.0;

  std::vector<Rotation> rotations;
  rotations.reserve(inliers.size());
  double log_scale_sum = 0.0;
  Vec3 u_sum = Vec3::Zero();
  std::array<int, 3> u_counts{0, 0, 0};
  for (const WindowEstimate* w : inliers) {
    rotations.push_back(w->estimate.rotation());
    log_scale_sum += std::log(w->estimate.scale());
    const Vec3 u = w->estimate.scaled_translation();
    for (int j = 0; j < 3; ++j) {
      if (w->observable_axes[j] || regularized) {
        u_sum[j] += u[j];
        ++u_counts[j];
      }
    }
  }

  const double scale = std::exp(log_scale_sum / double(inliers.size()));
  const Vec3 prior_u = prior.scaled_translation();
  Vec3 u;
  for (int j = 0; j < 3; ++j)
    u[j] = u_counts[j] > 0 ? u_sum[j] / double(u_counts[j]) : prior_u[j];

  return {SimilarityTransform(average_rotations(rotations), u / scale, scale),
          true};
}

CalibrationState step(CalibrationState state, const SyncedPair& pair,
                      const PipelineOptions& opts) {
  WindowEstimate window;
  window.index = state.windows_processed;
  window.estimate = state.consolidated;
  if (pair.size() > 0) {
    window.start_time = pair.set_a.timestamps.front();
    window.end_time = pair.set_a.timestamps.back();
  }
  window.pair_count = pair.size();

  bool candidate = false;
  if (pair.size() > 0) {
    window.diagnostics = diagnose_motion(pair);
    const GateResult gated = gate(window.diagnostics, opts);
    window.observable_axes = gated.observable_axes;

    if (gated.accepted && pair.size() >= 3) {
      SolverOptions solver_opts = opts.solver_options;
      solver_opts.initial_guess = state.consolidated;  // prior guess
      const SolveResult solved = solve(pair, solver_opts);
      window.solved = true;
      window.estimate = solved.estimate;
      window.cost = solved.final_cost;
      window.cost_per_pair = solved.final_cost / double(pair.size());
      if (early_reject_pass(window.cost_per_pair, opts)) {
        candidate = true;
      } else {
        window.rejection_reason = RejectionReason::high_cost;
      }
    }
  }

  if (candidate) {
    window.rejection_reason = RejectionReason::none;
    if (!opts.solver_options.fix_scale)
      state.scale_history.push_back(
          {window.end_time, window.estimate.scale()});
  }

  state.window_history.push_back(std::move(window));
  while (state.window_history.size() > opts.history_capacity)
    state.window_history.pop_front();

  // RANSAC re-runs over every cost-passing estimate in the history, so a
  // window's outlier status can change as consensus builds.
  std::vector<WindowEstimate*> candidates;
  for (WindowEstimate& w : state.window_history)
    if (w.rejection_reason == RejectionReason::none ||
        w.rejection_reason == RejectionReason::ransac_outlier)
      candidates.push_back(&w);

  std::vector<const WindowEstimate*> candidate_view(candidates.begin(),
                                                    candidates.end());
  const std::vector<std::size_t> inlier_idx =
      ransac_filter(candidate_view, opts);

  for (WindowEstimate* w : candidates)
    w->rejection_reason = RejectionReason::ransac_outlier;
  std::vector<const WindowEstimate*> inliers;
  inliers.reserve(inlier_idx.size());
  for (std::size_t i : inlier_idx) {
    candidates[i]->rejection_reason = RejectionReason::none;
    inliers.push_back(candidates[i]);
  }
  for (WindowEstimate& w : state.window_history)
    w.accepted = w.rejection_reason == RejectionReason::none;

  const ConsolidateResult result =
      consolidate(inliers, state.consolidated, opts);
  state.consolidated = result.value;
  state.updated_last_step = result.updated;
  state.inlier_count = inliers.size();
  state.observable_axes = {false, false, false};
  for (const WindowEstimate* w : inliers)
    for (int j = 0; j < 3; ++j)
      if (w->observable_axes[j]) state.observable_axes[j] = true;

  ++state.windows_processed;
  return state;
}

PoseStream rescale_trajectory(const PoseStream& stream,
                              const std::vector<ScaleSample>& scale_history) {
  if (scale_history.empty())
    throw std::invalid_argument("empty scale history");
  std::vector<ScaleSample> sorted = scale_history;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScaleSample& a, const ScaleSample& b) {
              return a.timestamp < b.timestamp;
            });

  const auto scale_at = [&sorted](double t) {
    auto it = std::upper_bound(
        sorted.begin(), sorted.end(), t,
        [](double ts, const ScaleSample& s) { return ts < s.timestamp; });
    if (it == sorted.begin()) return sorted.front().scale;
    return (it - 1)->scale;
  };

  PoseStream out;
  out.sensor_id = stream.sensor_id;
  out.poses.reserve(stream.poses.size());
  if (stream.poses.empty()) return out;

  Pose first = stream.poses.front();
  first.transform.translation *= scale_at(first.timestamp);
  out.poses.push_back(first);
  for (std::size_t k = 1; k < stream.poses.size(); ++k) {
    RigidTransform inc = stream.poses[k - 1].transform.inverse() *
                         stream.poses[k].transform;
    // An increment gets the scale in effect when it started.
    inc.translation *= scale_at(stream.poses[k - 1].timestamp);
    out.poses.push_back(
        {stream.poses[k].timestamp, out.poses.back().transform * inc});
  }
  return out;
}

}  // namespace autocal
