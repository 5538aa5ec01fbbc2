#pragma once

// Per-round diagnostics of the push-pull iteration: consensus and tracking
// residuals, coupled-constraint violation, optimality gap, the push-sum
// balance vector v_k and the transformed tracker s^k = V_k^{-1} eta^k, and
// numerical estimates of the absolute probability sequence of {A(k)}.

#include <optional>
#include <string>
#include <vector>

#include "pushpull/network.hpp"
#include "pushpull/oracle.hpp"
#include "pushpull/problem.hpp"
#include "pushpull/state.hpp"

namespace pushpull {

struct TraceRow {
  long k = 0;
  double alpha = 0;
  double consensus_x = 0;       // max_i |x_i - mean x|
  double consensus_lambda = 0;  // max_i |lambda_i - mean lambda|
  double tracking_z = 0;        // |sum z_i - sum d_i|
  double tracking_y = 0;        // |sum y_i - sum h_i(x_i)|
  Vector violation_ineq;        // max(sum_i h_i^j(mean x), 0), j <= p
  Vector violation_eq;          // |sum_i h_i^j(mean x)|, j > p
  std::optional<double> gap;    // f(mean x) - f*
  std::optional<double> s_norm;
  std::vector<double> dist_x;       // |x_i - x*| per agent (with certificate)
  std::vector<double> dist_lambda;  // |lambda_i - lambda*| per agent
  std::vector<double> agent_gap;    // f(x_i) - f* per agent
};

/// v_k in R^{2m}: first block pairs with the primal tracker z, second with
/// the constraint tracker y. v_0 = 1.
struct BalanceVector {
  Vector v;

  static BalanceVector ones(int m) { return BalanceVector{Vector::Ones(2 * m)}; }
  int agents() const { return static_cast<int>(v.size() / 2); }
};

/// Fills every field; certificate-dependent fields stay empty without one
/// and s_norm stays empty without a balance vector.
TraceRow compute_row(const SwarmState& state, const ProblemInstance& inst, const SaddleCertificate* certificate,
                     const BalanceVector* balance = nullptr, double alpha = 0);

/// v <- blockdiag(B, B) v. Throws NonStochastic if a column of B deviates
/// from 1 by more than 1e-9.
BalanceVector propagate_balance(const BalanceVector& bv, const Matrix& col_weights);

struct TransformedTracker {
  Matrix primal_block;  // row i: z_i / v_i
  Matrix dual_block;    // row i: -y_i / v_{m+i}
  Vector primal_mean;   // (1/2m) sum_i z_i
  Vector dual_mean;     // -(1/2m) sum_i y_i
  double norm = 0;      // Frobenius norm of s^k
};

/// s^k = V_k^{-1} eta^k with eta_i = (z_i, -y_i). Throws DegenerateBalance
/// if any balance entry is below 1e-12.
TransformedTracker transformed_tracker(const SwarmState& state, const BalanceVector& bv);

struct AbsProbEstimate {
  Vector mu;  // common row of A(s+T-1) ... A(s)
  double spread = 0;
};

/// Max over columns of (max_i - min_i) of the entries.
double row_spread(const Matrix& product);

/// Phi_A(s+T-1, s) = A(s+T-1) ... A(s).
Matrix weight_product(const WeightSchedule& ws, long s, long horizon);

/// Estimate of mu_s from a finite product. Throws NotConverged (carrying
/// the spread) if the row spread is not below tol.
AbsProbEstimate estimate_abs_prob(const WeightSchedule& ws, long s, long horizon = 200, double tol = 1e-8);

/// sum_i mu_i x_i, the absolute-probability weighted network average.
Vector weighted_mean_x(const SwarmState& state, const Vector& mu);

struct RateFitOptions {
  /// true: window start is floor(n/2) for each n; false: fixed start s.
  bool halving_start = true;
  long burn_in = 100;
  int grid_points = 40;
};

struct RateFit {
  std::vector<long> n;
  std::vector<long> start;
  std::vector<double> gap;           // g(n) = f(x~) - f*
  std::vector<double> step_sum;      // S(n) = sum_{k=start}^{n} alpha_k
  std::vector<double> product;       // |g(n)| S(n)
  std::vector<double> running_max;
  double empirical_m1 = 0;
  /// Least-squares slope of log|g| against log n (NaN if fewer than two
  /// grid points have g != 0).
  double slope = 0;
};

struct Trace;
struct StepSchedule;

/// Evaluates g(n) S(n) on a logarithmic grid of n in (max(s, burn_in), N].
/// Throws RangeError.
RateFit fit_rate(const Trace& trace, const StepSchedule& ss, long s, const SaddleCertificate& certificate,
                 const ProblemInstance& inst, const RateFitOptions& opts = {});

}  // namespace pushpull
