#pragma once

#include "autocal/geometry.hpp"
#include "autocal/sync.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace autocal {

struct SolverOptions {
  bool fix_scale = false;
  SimilarityTransform initial_guess;
  /// Weight of the measured-distance regularizer. 0 disables it.
  double regularizer_weight = 0.0;
  /// Tape-measured distance between the sensors, in first-sensor units.
  /// Required whenever regularizer_weight > 0.
  std::optional<double> measured_distance;
  int max_iterations = 200;
  double convergence_tol = 1e-12;  // relative objective decrease
  double damping_init = 1e-3;
};

struct SolveResult {
  SimilarityTransform estimate;
  /// Sum over pose pairs of the Frobenius norm of A*X - X*B (see cost()).
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective value after each accepted step, starting with the initial
  /// one. Non-increasing by construction.
  std::vector<double> accepted_objectives;
};

/// Sum over all rebased pose pairs of || A_t * X - X * B_t ||_F using the
/// similarity matrix embedding of X. Throws on a set length mismatch.
double cost(const SimilarityTransform& x, const SyncedPair& pair);

/// Levenberg-Marquardt minimization of the pairwise Frobenius residuals over
/// rotation (right tangent increment), scaled translation and log scale
/// (7 parameters; 6 with fix_scale). Starts from options.initial_guess.
/// Non-convergence and degenerate problems are reported through
/// SolveResult::converged, not exceptions.
SolveResult solve(const SyncedPair& pair, const SolverOptions& options = {});

/// Same objective summed over several windows, each with its own rebasing.
/// The regularizer term, when enabled, is applied once.
SolveResult solve_pooled(std::span<const SyncedPair> pairs,
                         const SolverOptions& options = {});

/// Number of optimization parameters under the given options (6 or 7).
int parameter_count(const SolverOptions& options);

/// Residual vector at x: for each pose pair the 9 rotation-block entries and
/// 3 translation-block entries of A*X - X*B (the constant bottom row is
/// excluded). The regularizer is an objective term inside solve(), not a
/// residual.
Eigen::VectorXd residuals(const SimilarityTransform& x, const SyncedPair& pair,
                          const SolverOptions& options = {});

/// Jacobian of residuals() with respect to the local parameters
/// [rotation tangent, scaled translation, log scale] at x.
Eigen::MatrixXd analytic_jacobian(const SimilarityTransform& x,
                                  const SyncedPair& pair,
                                  const SolverOptions& options = {});

/// Central-difference Jacobian (step 1e-6 per parameter), for checking the
/// analytic one.
Eigen::MatrixXd numeric_jacobian(const SimilarityTransform& x,
                                 const SyncedPair& pair,
                                 const SolverOptions& options = {});

/// Apply a local parameter increment to x (right-multiplied rotation tangent,
/// additive scaled translation, additive log scale).
SimilarityTransform retract(const SimilarityTransform& x,
                            const Eigen::VectorXd& delta,
                            const SolverOptions& options);

}  // namespace autocal
