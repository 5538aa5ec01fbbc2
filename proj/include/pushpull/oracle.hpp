#pragma once

// Centralized reference solver. It evaluates the Lagrangian with its own
// code paths and shares only coefficient data with the distributed engine,
// so agreement between the two is evidence rather than tautology.

#include <cstdint>
#include <string>

#include "pushpull/problem.hpp"

namespace pushpull {

struct SaddleCertificate {
  Vector x_star;
  Vector lambda_star;
  double f_star = 0;
  /// |x - P_X(x - grad_x L)| + |lambda - P_Q(lambda + grad_lambda L)|.
  double kkt_residual = 0;
  /// Largest saddle-inequality violation over the verification probes.
  double saddle_gap = 0;
  double tolerance = 0;
  std::string method;
};

struct OracleOptions {
  /// Iteration budget shared by the averaging phase and the refinement.
  long max_iterations = 1'000'000;
  double step_c = 1.0;
  double step_exponent = 0.75;
  /// Arrow-Hurwicz averages good to this residual go straight to the
  /// augmented-Lagrangian refinement.
  double warm_start_residual = 1e-3;
  int saddle_probes = 1000;
  std::uint64_t probe_seed = 7;
};

/// Natural (fixed-point) residual at probe step 1 over X x Q.
double kkt_residual(const ProblemInstance& inst, const Vector& x, const Vector& lambda);

/// Lagrangian L(x, lambda) = sum_i f_i(x) + lambda' sum_i h_i(x).
double lagrangian(const ProblemInstance& inst, const Vector& x, const Vector& lambda);

struct MinResult {
  Vector x;
  double value = 0;
  long iterations = 0;
};

/// q(lambda) = min_{x in X} L(x, lambda) by projected gradient descent with
/// backtracking. For n <= 2 a coarse grid scan guards against stalls.
/// Throws NoConvergence.
MinResult min_over_X(const ProblemInstance& inst, const Vector& lambda, double tol);

/// Certified saddle point of L over X x Q: projected primal-dual iteration
/// with diminishing steps and ergodic averaging, refined by an augmented
/// Lagrangian loop until the residual is below tol. Throws NoConvergence.
SaddleCertificate solve_centralized(const ProblemInstance& inst, double tol,
                                    const OracleOptions& opts = {});

struct SaddleReport {
  int probes = 0;
  /// max over probes of L(x, l) - L(x, lambda)
  double max_left_violation = 0;
  /// max over probes of L(x, lambda) - L(x', lambda)
  double max_right_violation = 0;
  double tolerance = 0;
  bool pass = true;
};

/// Samples probes uniformly from X and from Q (equality multipliers from a
/// box of half-width max(10, radius) around lambda) and checks both saddle
/// inequalities at tol. probes = 0 passes vacuously.
SaddleReport verify_saddle(const ProblemInstance& inst, const Vector& x, const Vector& lambda, int probes,
                           double tol, std::uint64_t seed = 7);

}  // namespace pushpull
