#include "autocal/solver.hpp"

#include <cfloat>
#include <cmath>
#include <stdexcept>

namespace autocal {

namespace {

constexpr double kRegularizerEps = 1e-12;  // smoothing of |  ||u|| - d  |
constexpr double kFiniteDiffStep = 1e-6;

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

void check_options(const SolverOptions& opts) {
  if (opts.regularizer_weight > 0.0 && !opts.measured_distance)
    throw std::invalid_argument(
        "regularizer_weight > 0 requires measured_distance");
  if (opts.regularizer_weight < 0.0)
    throw std::invalid_argument("regularizer_weight must be >= 0");
}

void check_pair(const SyncedPair& pair) {
  if (pair.set_a.size() != pair.set_b.size())
    throw std::invalid_argument("pose set length mismatch");
}

bool use_regularizer(const SolverOptions& opts) {
  return opts.regularizer_weight > 0.0;
}

Eigen::Index residual_rows(std::span<const SyncedPair> pairs) {
  Eigen::Index rows = 0;
  for (const SyncedPair& p : pairs) rows += 12 * Eigen::Index(p.size());
  return rows;
}

// Smoothed distance mismatch sqrt(g^2 + eps), g = ||u|| - d, with its exact
// gradient and a positive-semidefinite Hessian approximation in u. The
// eps smoothing concentrates curvature eps/omega^3 in a narrow valley around
// g = 0, so the Hessian term is what lets the optimizer settle there.
struct RegularizerTerm {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

RegularizerTerm regularizer_term(const Vec3& u, double d, double weight,
                                 int params) {
  RegularizerTerm term;
  const double un = u.norm();
  const double g = un - d;
  const double omega = std::sqrt(g * g + kRegularizerEps);
  term.value = weight * omega;
  term.gradient = Eigen::VectorXd::Zero(params);
  term.hessian = Eigen::MatrixXd::Zero(params, params);
  if (un < 1e-9) return term;  // flat saddle at u = 0

  const Vec3 dir = u / un;
  const Vec3 grad_u = weight * (g / omega) * dir;
  const Mat3 radial = (weight * kRegularizerEps / (omega * omega * omega)) *
                      (dir * dir.transpose());
  const Mat3 tangential = (weight * std::max(g, 0.0) / (omega * un)) *
                          (Mat3::Identity() - dir * dir.transpose());
  for (int j = 0; j < 3; ++j) term.gradient[3 + j] = grad_u[j];
  term.hessian.block<3, 3>(3, 3) = radial + tangential;
  return term;
}

void eval_residuals(const SimilarityTransform& x,
                    std::span<const SyncedPair> pairs, Eigen::VectorXd& r) {
  const Mat3 rot = x.rotation().matrix();
  const double s = x.scale();
  const Vec3 u = x.scaled_translation();

  r.resize(residual_rows(pairs));
  Eigen::Index row = 0;
  for (const SyncedPair& pair : pairs) {
    for (std::size_t k = 0; k < pair.size(); ++k) {
      const Mat3 ra = pair.set_a.poses[k].rotation.matrix();
      const Mat3 rb = pair.set_b.poses[k].rotation.matrix();
      const Vec3& ta = pair.set_a.poses[k].translation;
      const Vec3& tb = pair.set_b.poses[k].translation;
      const Mat3 block = s * (ra * rot - rot * rb);
      const Vec3 trans = ra * u + ta - s * (rot * tb) - u;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r[row++] = block(i, j);
      for (int i = 0; i < 3; ++i) r[row++] = trans[i];
    }
  }
}

void eval_jacobian(const SimilarityTransform& x,
                   std::span<const SyncedPair> pairs,
                   const SolverOptions& opts, Eigen::MatrixXd& jac) {
  const Mat3 rot = x.rotation().matrix();
  const double s = x.scale();
  const int cols = parameter_count(opts);

  jac.setZero(residual_rows(pairs), cols);
  Eigen::Index row = 0;
  for (const SyncedPair& pair : pairs) {
    for (std::size_t k = 0; k < pair.size(); ++k) {
      const Mat3 ra = pair.set_a.poses[k].rotation.matrix();
      const Mat3 rb = pair.set_b.poses[k].rotation.matrix();
      const Vec3& tb = pair.set_b.poses[k].translation;

      for (int c = 0; c < 3; ++c) {
        const Mat3 gen = skew(Vec3::Unit(c));
        const Mat3 d_block = s * (ra * rot * gen - rot * gen * rb);
        const Vec3 d_trans = -s * (rot * (gen * tb));
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) jac(row + 3 * i + j, c) = d_block(i, j);
        for (int i = 0; i < 3; ++i) jac(row + 9 + i, c) = d_trans[i];
      }
      // Translation block depends on u through (R_A - I); the rotation block
      // does not depend on u at all.
      const Mat3 d_u = ra - Mat3::Identity();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) jac(row + 9 + i, 3 + j) = d_u(i, j);

      if (cols == 7) {
        const Mat3 block = s * (ra * rot - rot * rb);
        const Vec3 d_trans = -s * (rot * tb);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) jac(row + 3 * i + j, 6) = block(i, j);
        for (int i = 0; i < 3; ++i) jac(row + 9 + i, 6) = d_trans[i];
      }
      row += 12;
    }
  }
}

}  // namespace

double cost(const SimilarityTransform& x, const SyncedPair& pair) {
  check_pair(pair);
  const Mat3 rot = x.rotation().matrix();
  const double s = x.scale();
  const Vec3 u = x.scaled_translation();
  double total = 0.0;
  for (std::size_t k = 0; k < pair.size(); ++k) {
    const Mat3 ra = pair.set_a.poses[k].rotation.matrix();
    const Mat3 rb = pair.set_b.poses[k].rotation.matrix();
    const Mat3 block = s * (ra * rot - rot * rb);
    const Vec3 trans = ra * u + pair.set_a.poses[k].translation -
                       s * (rot * pair.set_b.poses[k].translation) - u;
    total += std::sqrt(block.squaredNorm() + trans.squaredNorm());
  }
  return total;
}

int parameter_count(const SolverOptions& options) {
  return options.fix_scale ? 6 : 7;
}

SimilarityTransform retract(const SimilarityTransform& x,
                            const Eigen::VectorXd& delta,
                            const SolverOptions& options) {
  const Rotation r =
      x.rotation() * Rotation::from_rotation_vector(delta.segment<3>(0));
  const Vec3 u = x.scaled_translation() + delta.segment<3>(3);
  const double s =
      options.fix_scale ? x.scale() : x.scale() * std::exp(delta[6]);
  return SimilarityTransform(r, u / s, s);
}

Eigen::VectorXd residuals(const SimilarityTransform& x, const SyncedPair& pair,
                          const SolverOptions& options) {
  check_options(options);
  check_pair(pair);
  Eigen::VectorXd r;
  eval_residuals(x, {&pair, 1}, r);
  return r;
}

Eigen::MatrixXd analytic_jacobian(const SimilarityTransform& x,
                                  const SyncedPair& pair,
                                  const SolverOptions& options) {
  check_options(options);
  check_pair(pair);
  Eigen::MatrixXd jac;
  eval_jacobian(x, {&pair, 1}, options, jac);
  return jac;
}

Eigen::MatrixXd numeric_jacobian(const SimilarityTransform& x,
                                 const SyncedPair& pair,
                                 const SolverOptions& options) {
  check_options(options);
  check_pair(pair);
  const int cols = parameter_count(options);
  Eigen::VectorXd plus, minus;
  Eigen::MatrixXd jac(residual_rows({&pair, 1}), cols);
  for (int c = 0; c < cols; ++c) {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(cols);
    delta[c] = kFiniteDiffStep;
    eval_residuals(retract(x, delta, options), {&pair, 1}, plus);
    delta[c] = -kFiniteDiffStep;
    eval_residuals(retract(x, delta, options), {&pair, 1}, minus);
    jac.col(c) = (plus - minus) / (2.0 * kFiniteDiffStep);
  }
  return jac;
}

SolveResult solve_pooled(std::span<const SyncedPair> pairs,
                         const SolverOptions& options) {
  check_options(options);
  std::size_t total_pairs = 0;
  for (const SyncedPair& p : pairs) {
    check_pair(p);
    total_pairs += p.size();
  }
  if (pairs.empty() || total_pairs < 3)
    throw std::invalid_argument("solve requires at least 3 pose pairs");

  const int params = parameter_count(options);
  const bool regularized = use_regularizer(options);
  const double alpha = options.regularizer_weight;
  const double distance = options.measured_distance.value_or(0.0);

  // Objective: squared residual norm, plus the smooth distance-mismatch term
  // alpha * omega when enabled.
  const auto objective_at = [&](const SimilarityTransform& at,
                                Eigen::VectorXd& r) {
    eval_residuals(at, pairs, r);
    double obj = r.squaredNorm();
    if (regularized)
      obj += regularizer_term(at.scaled_translation(), distance, alpha,
                              params)
                 .value;
    return obj;
  };

  SolveResult result;
  SimilarityTransform x = options.initial_guess;

  Eigen::VectorXd r, r_try;
  Eigen::MatrixXd jac;
  double objective = objective_at(x, r);
  result.accepted_objectives.push_back(objective);

  if (!std::isfinite(objective)) {
    result.estimate = x;
    return result;  // converged=false
  }

  double mu = options.damping_init;
  bool converged = false;
  bool aborted = false;
  int iter = 0;
  while (iter < options.max_iterations) {
    ++iter;
    eval_jacobian(x, pairs, options, jac);
    if (!jac.allFinite()) {
      aborted = true;
      break;
    }
    Eigen::MatrixXd hessian = 2.0 * (jac.transpose() * jac);
    Eigen::VectorXd gradient = 2.0 * (jac.transpose() * r);
    if (regularized) {
      const RegularizerTerm reg = regularizer_term(x.scaled_translation(),
                                                   distance, alpha, params);
      hessian += reg.hessian;
      gradient += reg.gradient;
    }
    if (gradient.lpNorm<Eigen::Infinity>() < 1e-15) {
      // Stationary: either at the minimum or the Jacobian is degenerate.
      converged = objective < 1e-20;
      break;
    }

    const double max_diag = hessian.diagonal().maxCoeff();
    const Eigen::VectorXd damping =
        hessian.diagonal().cwiseMax(std::max(1e-12, 1e-10 * max_diag));
    Eigen::MatrixXd damped = hessian;
    damped.diagonal() += mu * damping;
    Eigen::VectorXd delta = damped.ldlt().solve(-gradient);
    if (!delta.allFinite()) {
      aborted = true;
      break;
    }

    // Trust-region style clamp. Near-flat directions (unobservable axes, the
    // two-sided distance regularizer) otherwise admit arbitrarily long steps
    // that can hop across objective ridges away from the prior's basin.
    const double trans_cap =
        std::max(0.3, 0.3 * std::max(x.scaled_translation().norm(),
                                     regularized ? distance : 0.0));
    const double rot_step = delta.segment<3>(0).norm();
    const double trans_step = delta.segment<3>(3).norm();
    const double scale_step = params == 7 ? std::abs(delta[6]) : 0.0;
    double shrink = 1.0;
    if (rot_step > 0.5) shrink = std::min(shrink, 0.5 / rot_step);
    if (trans_step > trans_cap)
      shrink = std::min(shrink, trans_cap / trans_step);
    if (scale_step > 0.5) shrink = std::min(shrink, 0.5 / scale_step);
    delta *= shrink;

    const SimilarityTransform x_try = retract(x, delta, options);
    const double obj_try = objective_at(x_try, r_try);

    if (std::isfinite(obj_try) && obj_try < objective) {
      const double rel = (objective - obj_try) / std::max(objective, DBL_MIN);
      x = x_try;
      r.swap(r_try);
      objective = obj_try;
      result.accepted_objectives.push_back(objective);
      mu = std::max(mu * 0.1, 1e-15);
      if (rel < options.convergence_tol || objective < 1e-30) {
        converged = true;
        break;
      }
    } else {
      mu *= 10.0;
      if (mu > 1e12) {
        // No acceptable step exists anymore; the achievable decrease is zero.
        converged = true;
        break;
      }
    }
  }

  result.estimate = x;
  result.iterations = iter;
  result.converged = converged && !aborted;
  result.final_cost = 0.0;
  for (const SyncedPair& p : pairs) result.final_cost += cost(x, p);
  return result;
}

SolveResult solve(const SyncedPair& pair, const SolverOptions& options) {
  return solve_pooled({&pair, 1}, options);
}

}  // namespace autocal
