#pragma once

// Synchronous push-pull primal-dual iteration. Every round, agent i
//
//   v_i  = sum_j a_ij(k) x_j            u_i = sum_j a_ij(k) lambda_j
//   x_i+ = P_X(v_i - alpha_k z_i)       lambda_i+ = P_Q(u_i + alpha_k y_i)
//   y_i+ = sum_j b_ij(k) y_j + h_i(x_i+) - h_i(x_i)
//   d_i+ = grad_x L_i(x_i+, lambda_i+)
//   z_i+ = sum_j b_ij(k) z_j + d_i+ - d_i
//
// with every right-hand side read from the round-k snapshot.

#include <optional>
#include <utility>
#include <vector>

#include "pushpull/analysis.hpp"
#include "pushpull/network.hpp"
#include "pushpull/problem.hpp"
#include "pushpull/state.hpp"

namespace pushpull {

/// alpha_k = c / (k + 1)^exponent with exponent = 1/2 + beta in (1/2, 1].
struct StepSchedule {
  double c = 2.0;
  double exponent = 0.6;

  /// Throws InvalidArgument unless c > 0 and exponent in (0.5, 1].
  void validate() const;
};

double step_size(const StepSchedule& ss, long k);

/// Parallelism of the per-agent loop. Results are bitwise identical across
/// all three; `automatic` forks only when there are enough agents to pay
/// for the thread team.
enum class Execution { serial, parallel, automatic };

/// y_i = h_i(x_i), z_i = d_i = grad_x L_i(x_i, lambda_i), lambda_i projected
/// into Q. Throws DimensionMismatch or InfeasibleStart.
SwarmState init_state(const ProblemInstance& inst, const std::vector<Vector>& x0,
                      const std::vector<Vector>& lambda0);

/// All agents at x0 = 0 (clamped into X) and lambda0 = 0.
SwarmState init_state_zeros(const ProblemInstance& inst);

/// Nonzero weights of one matrix as per-row (column index, weight) lists in
/// ascending column order; the mixing sums iterate these in order.
struct SparseWeights {
  std::vector<std::vector<std::pair<int, double>>> rows;

  static SparseWeights from_dense(const Matrix& w);
};

/// Sparse form of every A(k), B(k) in one period.
struct CompiledWeights {
  std::vector<SparseWeights> row;
  std::vector<SparseWeights> col;

  static CompiledWeights compile(const WeightSchedule& ws);
  int period() const { return static_cast<int>(row.size()); }
};

/// One synchronous round using A(k), B(k) with k = state.round.
/// Throws NonFiniteState.
SwarmState step(const SwarmState& state, const ProblemInstance& inst, const WeightSchedule& ws,
                const StepSchedule& ss, Execution exec = Execution::automatic);

SwarmState step(const SwarmState& state, const ProblemInstance& inst, const CompiledWeights& weights,
                double alpha, Execution exec = Execution::automatic);

/// Plain loop over agents; kept as the reference the OpenMP path is tested
/// against.
SwarmState step_serial(const SwarmState& state, const ProblemInstance& inst, const CompiledWeights& weights,
                       double alpha);
/// Agents split across an OpenMP team; one barrier per round.
SwarmState step_parallel(const SwarmState& state, const ProblemInstance& inst, const CompiledWeights& weights,
                         double alpha);

struct RunOptions {
  long rounds = 0;
  long record_every = 1;
  Execution exec = Execution::automatic;
  /// Enables the gap and distance columns of the trace rows.
  const SaddleCertificate* certificate = nullptr;
  /// Skip the weight/connectivity preconditions (unit tests only).
  bool skip_preconditions = false;
};

struct Trace {
  /// States at rounds 0, s, 2s, ..., and always the final round.
  std::vector<SwarmState> states;
  /// One row per recorded state.
  std::vector<TraceRow> rows;
  /// Per round 0..N.
  std::vector<double> alphas;
  std::vector<Vector> mean_x;
  std::vector<Vector> mean_lambda;
  double max_tracking_z = 0;
  double max_tracking_y = 0;
  double max_s_norm = 0;

  long last_round() const { return static_cast<long>(alphas.size()) - 1; }
  const SwarmState& final_state() const { return states.back(); }
};

/// Runs `rounds` rounds from the given start. Checks validate_weights and
/// check_connectivity at the schedule's declared window first (throws
/// PreconditionFailed). A failing step is rethrown as NonFiniteState
/// carrying the round index.
Trace run(const ProblemInstance& inst, const GraphSchedule& sched, const WeightSchedule& ws,
          const StepSchedule& ss, const std::vector<Vector>& x0, const std::vector<Vector>& lambda0,
          const RunOptions& opts);

/// Step-size weighted average of the network-mean primal iterate over
/// rounds [s, n]. Throws RangeError.
Vector ergodic_average(const Trace& trace, long s, long n, const StepSchedule& ss);

}  // namespace pushpull
