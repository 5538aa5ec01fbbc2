#include "pushpull/engine.hpp"

#include <cmath>
#include <string>

#include <omp.h>

#include "pushpull/errors.hpp"
#include "pushpull/projections.hpp"

namespace pushpull {

namespace {

// Below this many agents the thread team costs more than the round.
constexpr int kParallelAgentThreshold = 64;

void check_dims(const ProblemInstance& inst, const Vector& x, const Vector& lambda, int agent) {
  if (x.size() != inst.n || lambda.size() != inst.dual_dim())
    throw DimensionMismatch("agent " + std::to_string(agent) + " start has wrong dimension");
}

// Fixed ascending-j accumulation of sum_j w_ij * values[j].<member>.
template <typename Member>
Vector mix(const std::vector<std::pair<int, double>>& row, const std::vector<AgentState>& agents, Member member) {
  Vector acc = row.front().second * (agents[static_cast<std::size_t>(row.front().first)].*member);
  for (std::size_t t = 1; t < row.size(); ++t)
    acc += row[t].second * (agents[static_cast<std::size_t>(row[t].first)].*member);
  return acc;
}

// Round-k update of agent i; reads only `cur`, writes only next.agents[i].
bool update_agent(int i, const SwarmState& cur, SwarmState& next, const ProblemInstance& inst,
                  const SparseWeights& row_w, const SparseWeights& col_w, double alpha, const DualSet& dual_set) {
  const auto& self = cur.agents[static_cast<std::size_t>(i)];
  const auto& pull = row_w.rows[static_cast<std::size_t>(i)];
  const auto& push = col_w.rows[static_cast<std::size_t>(i)];
  const auto& obj = inst.objectives[static_cast<std::size_t>(i)];
  const auto& con = inst.constraints[static_cast<std::size_t>(i)];
  auto& out = next.agents[static_cast<std::size_t>(i)];

  const Vector v = mix(pull, cur.agents, &AgentState::x);
  const Vector u = mix(pull, cur.agents, &AgentState::lambda);
  out.x = project_box(v - alpha * self.z, inst.feasible_set);
  out.lambda = project_dual(u + alpha * self.y, dual_set);

  // Written as (mix - old) + new so that a single agent with unit weights
  // keeps y == h(x) and z == d exactly.
  out.y = (mix(push, cur.agents, &AgentState::y) - eval_constraints(con, self.x)) + eval_constraints(con, out.x);
  out.d = primal_grad(obj, con, out.x, out.lambda);
  out.z = (mix(push, cur.agents, &AgentState::z) - self.d) + out.d;

  return out.x.allFinite() && out.lambda.allFinite() && out.y.allFinite() && out.z.allFinite() && out.d.allFinite();
}

SwarmState prepare_next(const SwarmState& state) {
  SwarmState next;
  next.round = state.round + 1;
  next.agents.resize(state.agents.size());
  return next;
}

void check_weights_fit(const SwarmState& state, const CompiledWeights& weights) {
  if (weights.period() == 0) throw InvalidArgument("empty weight schedule");
  const auto& r = weights.row[static_cast<std::size_t>(state.round % weights.period())];
  if (static_cast<int>(r.rows.size()) != state.size())
    throw DimensionMismatch("weight matrices do not match the number of agents");
}

[[noreturn]] void throw_non_finite(const SwarmState& state, int agent) {
  throw NonFiniteState(state.round, "agent " + std::to_string(agent) + " produced a non-finite value");
}

}  // namespace

void StepSchedule::validate() const {
  if (!(c > 0)) throw InvalidArgument("step size constant c must be > 0");
  if (!(exponent > 0.5 && exponent <= 1.0)) throw InvalidArgument("step exponent must lie in (0.5, 1]");
}

double step_size(const StepSchedule& ss, long k) {
  if (k < 0) throw RangeError("step_size: negative round");
  return ss.c / std::pow(static_cast<double>(k + 1), ss.exponent);
}

SparseWeights SparseWeights::from_dense(const Matrix& w) {
  SparseWeights sw;
  sw.rows.resize(static_cast<std::size_t>(w.rows()));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      if (w(i, j) != 0) sw.rows[static_cast<std::size_t>(i)].emplace_back(static_cast<int>(j), w(i, j));
    if (sw.rows[static_cast<std::size_t>(i)].empty())
      throw MissingSelfLoop("weight row " + std::to_string(i) + " is empty");
  }
  return sw;
}

CompiledWeights CompiledWeights::compile(const WeightSchedule& ws) {
  CompiledWeights cw;
  for (const auto& a : ws.row_weights) cw.row.push_back(SparseWeights::from_dense(a));
  // b_ij is what j pushes to i, so row i of B lists the incoming shares.
  for (const auto& b : ws.col_weights) cw.col.push_back(SparseWeights::from_dense(b));
  return cw;
}

Vector SwarmState::mean_x() const {
  Vector acc = agents.front().x;
  for (std::size_t i = 1; i < agents.size(); ++i) acc += agents[i].x;
  return acc / static_cast<double>(agents.size());
}

Vector SwarmState::mean_lambda() const {
  Vector acc = agents.front().lambda;
  for (std::size_t i = 1; i < agents.size(); ++i) acc += agents[i].lambda;
  return acc / static_cast<double>(agents.size());
}

SwarmState init_state(const ProblemInstance& inst, const std::vector<Vector>& x0,
                      const std::vector<Vector>& lambda0) {
  if (static_cast<int>(x0.size()) != inst.m || static_cast<int>(lambda0.size()) != inst.m)
    throw DimensionMismatch("init_state needs one start per agent");
  const DualSet dual_set = dual_set_of(inst);
  SwarmState state;
  state.agents.resize(static_cast<std::size_t>(inst.m));
  for (int i = 0; i < inst.m; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    check_dims(inst, x0[idx], lambda0[idx], i);
    if (!x0[idx].allFinite() || !inst.feasible_set.contains(x0[idx]))
      throw InfeasibleStart("agent " + std::to_string(i) + " starts outside X");
    if (!lambda0[idx].allFinite()) throw InvalidArgument("agent " + std::to_string(i) + " has non-finite lambda0");
    auto& a = state.agents[idx];
    a.x = x0[idx];
    a.lambda = project_dual(lambda0[idx], dual_set);
    a.y = eval_constraints(inst.constraints[idx], a.x);
    a.d = primal_grad(inst.objectives[idx], inst.constraints[idx], a.x, a.lambda);
    a.z = a.d;
  }
  return state;
}

SwarmState init_state_zeros(const ProblemInstance& inst) {
  const Vector x0 = project_box(Vector::Zero(inst.n), inst.feasible_set);
  return init_state(inst, std::vector<Vector>(static_cast<std::size_t>(inst.m), x0),
                    std::vector<Vector>(static_cast<std::size_t>(inst.m), Vector::Zero(inst.dual_dim())));
}

SwarmState step_serial(const SwarmState& state, const ProblemInstance& inst, const CompiledWeights& weights,
                       double alpha) {
  check_weights_fit(state, weights);
  const auto phase = static_cast<std::size_t>(state.round % weights.period());
  const DualSet dual_set = dual_set_of(inst);
  SwarmState next = prepare_next(state);
  for (int i = 0; i < state.size(); ++i)
    if (!update_agent(i, state, next, inst, weights.row[phase], weights.col[phase], alpha, dual_set))
      throw_non_finite(state, i);
  return next;
}

SwarmState step_parallel(const SwarmState& state, const ProblemInstance& inst, const CompiledWeights& weights,
                         double alpha) {
  check_weights_fit(state, weights);
  const auto phase = static_cast<std::size_t>(state.round % weights.period());
  const DualSet dual_set = dual_set_of(inst);
  SwarmState next = prepare_next(state);
  const int m = state.size();
  int bad_agent = m;
#pragma omp parallel for schedule(static) reduction(min : bad_agent)
  for (int i = 0; i < m; ++i) {
    if (!update_agent(i, state, next, inst, weights.row[phase], weights.col[phase], alpha, dual_set))
      bad_agent = std::min(bad_agent, i);
  }
  if (bad_agent < m) throw_non_finite(state, bad_agent);
  return next;
}

SwarmState step(const SwarmState& state, const ProblemInstance& inst, const CompiledWeights& weights, double alpha,
                Execution exec) {
  const bool parallel = exec == Execution::parallel ||
                        (exec == Execution::automatic && state.size() >= kParallelAgentThreshold &&
                         omp_get_max_threads() > 1);
  return parallel ? step_parallel(state, inst, weights, alpha) : step_serial(state, inst, weights, alpha);
}

SwarmState step(const SwarmState& state, const ProblemInstance& inst, const WeightSchedule& ws,
                const StepSchedule& ss, Execution exec) {
  return step(state, inst, CompiledWeights::compile(ws), step_size(ss, state.round), exec);
}

Trace run(const ProblemInstance& inst, const GraphSchedule& sched, const WeightSchedule& ws,
          const StepSchedule& ss, const std::vector<Vector>& x0, const std::vector<Vector>& lambda0,
          const RunOptions& opts) {
  ss.validate();
  if (opts.rounds < 0) throw RangeError("run: rounds must be >= 0");
  if (opts.record_every < 1) throw RangeError("run: record_every must be >= 1");
  if (!opts.skip_preconditions) {
    if (sched.nodes() != inst.m) throw DimensionMismatch("schedule node count differs from agent count");
    const auto report = validate_weights(ws, sched);
    if (!report.ok)
      throw PreconditionFailed("weight validation failed: " + (report.problems.empty() ? std::string("?") : report.problems.front()));
    if (!check_connectivity(sched, sched.connectivity_window))
      throw PreconditionFailed("schedule is not " + std::to_string(sched.connectivity_window) + "-strongly connected");
  }

  const CompiledWeights weights = CompiledWeights::compile(ws);
  Trace trace;
  SwarmState state = init_state(inst, x0, lambda0);
  BalanceVector balance = BalanceVector::ones(inst.m);

  trace.alphas.reserve(static_cast<std::size_t>(opts.rounds + 1));
  trace.mean_x.reserve(static_cast<std::size_t>(opts.rounds + 1));
  trace.mean_lambda.reserve(static_cast<std::size_t>(opts.rounds + 1));

  for (long k = 0;; ++k) {
    const double alpha = step_size(ss, k);
    TraceRow row = compute_row(state, inst, opts.certificate, &balance, alpha);
    trace.alphas.push_back(alpha);
    trace.mean_x.push_back(state.mean_x());
    trace.mean_lambda.push_back(state.mean_lambda());
    trace.max_tracking_z = std::max(trace.max_tracking_z, row.tracking_z);
    trace.max_tracking_y = std::max(trace.max_tracking_y, row.tracking_y);
    if (row.s_norm) trace.max_s_norm = std::max(trace.max_s_norm, *row.s_norm);
    if (k % opts.record_every == 0 || k == opts.rounds) {
      trace.states.push_back(state);
      trace.rows.push_back(std::move(row));
    }
    if (k == opts.rounds) break;
    state = step(state, inst, weights, alpha, opts.exec);
    balance = propagate_balance(balance, ws.col_at(k));
  }
  return trace;
}

Vector ergodic_average(const Trace& trace, long s, long n, const StepSchedule& ss) {
  if (s < 0 || s > n || n > trace.last_round())
    throw RangeError("ergodic_average: need 0 <= s <= n <= " + std::to_string(trace.last_round()));
  Vector weighted = Vector::Zero(trace.mean_x.front().size());
  double total = 0;
  for (long k = s; k <= n; ++k) {
    const double alpha = step_size(ss, k);
    weighted += alpha * trace.mean_x[static_cast<std::size_t>(k)];
    total += alpha;
  }
  return weighted / total;
}

}  // namespace pushpull
