#include <doctest.h>

#include <cmath>
#include <limits>

#include <omp.h>

#include "pushpull/engine.hpp"
#include "pushpull/errors.hpp"
#include "pushpull/projections.hpp"
#include "support/fixtures.hpp"

using namespace pushpull;
using fixtures::vec;

namespace {

bool same_state(const SwarmState& a, const SwarmState& b) {
  if (a.round != b.round || a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i) {
    const auto& p = a.agents[static_cast<std::size_t>(i)];
    const auto& q = b.agents[static_cast<std::size_t>(i)];
    if (p.x != q.x || p.lambda != q.lambda || p.z != q.z || p.y != q.y || p.d != q.d) return false;
  }
  return true;
}

std::vector<Vector> copies(int m, const Vector& v) { return std::vector<Vector>(static_cast<std::size_t>(m), v); }

struct Canonical {
  ProblemInstance inst = canonical_instance(42);
  GraphSchedule sched = canonical_schedule();
  WeightSchedule ws = uniform_weights(sched);
  StepSchedule ss{};
};

}  // namespace

TEST_CASE("step sizes") {
  const StepSchedule canonical{2.0, 0.6};
  CHECK(step_size(canonical, 0) == 2.0);
  // 2 / 4^0.6 = 2^-0.2
  CHECK(step_size(canonical, 3) == doctest::Approx(0.8705505633).epsilon(1e-9));
  CHECK(step_size(StepSchedule{1.0, 1.0}, 9) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK_THROWS_AS(step_size(canonical, -1), RangeError);
  CHECK_NOTHROW(canonical.validate());
  CHECK_THROWS_AS((StepSchedule{2.0, 0.5}.validate()), InvalidArgument);
  CHECK_THROWS_AS((StepSchedule{2.0, 1.1}.validate()), InvalidArgument);
  CHECK_THROWS_AS((StepSchedule{0.0, 0.6}.validate()), InvalidArgument);
}

TEST_CASE("init_state sets trackers to local values") {
  const Canonical c;
  const SwarmState s = init_state_zeros(c.inst);
  CHECK(s.round == 0);
  REQUIRE(s.size() == 6);
  Vector zsum = Vector::Zero(2), dsum = Vector::Zero(2), ysum = Vector::Zero(2), hsum = Vector::Zero(2);
  for (int i = 0; i < 6; ++i) {
    const auto& a = s.agents[static_cast<std::size_t>(i)];
    zsum += a.z;
    dsum += a.d;
    ysum += a.y;
    hsum += eval_constraints(c.inst.constraints[static_cast<std::size_t>(i)], a.x);
  }
  CHECK((zsum - dsum).norm() == 0.0);
  CHECK((ysum - hsum).norm() == 0.0);

  CHECK_THROWS_AS(init_state(c.inst, copies(6, vec({4, 0})), copies(6, vec({0, 0}))), InfeasibleStart);
  CHECK_THROWS_AS(init_state(c.inst, copies(5, vec({0, 0})), copies(5, vec({0, 0}))), DimensionMismatch);
  CHECK_THROWS_AS(init_state(c.inst, copies(6, vec({0, 0, 0})), copies(6, vec({0, 0}))), DimensionMismatch);

  const SwarmState projected = init_state(c.inst, copies(6, vec({0, 0})), copies(6, vec({-3, 2})));
  CHECK(projected.agents[0].lambda == vec({0, 2}));
}

TEST_CASE("zero step with identity weights is a fixed point") {
  const Canonical c;
  const WeightSchedule id = uniform_weights(fixtures::self_loop_schedule(6));
  const SwarmState s = init_state(c.inst, copies(6, vec({0.5, -1})), copies(6, vec({0.1, 0.3})));
  const SwarmState next = step(s, c.inst, CompiledWeights::compile(id), 0.0);
  CHECK(next.round == 1);
  SwarmState expected = s;
  expected.round = 1;
  CHECK(same_state(next, expected));
}

TEST_CASE("one step preserves the tracking sums") {
  const Canonical c;
  const SwarmState s = step(init_state_zeros(c.inst), c.inst, c.ws, c.ss);
  const TraceRow row = compute_row(s, c.inst, nullptr);
  CHECK(row.tracking_z <= 1e-10);
  CHECK(row.tracking_y <= 1e-10);
}

TEST_CASE("cached d equals a fresh evaluation") {
  const Canonical c;
  RunOptions opts;
  opts.rounds = 300;
  opts.record_every = 7;
  const Trace t = run(c.inst, c.sched, c.ws, c.ss, copies(6, vec({1, 1})), copies(6, vec({0, 0})), opts);
  double worst = 0;
  for (const auto& s : t.states)
    for (int i = 0; i < 6; ++i) {
      const auto& a = s.agents[static_cast<std::size_t>(i)];
      const Vector fresh = primal_grad(c.inst.objectives[static_cast<std::size_t>(i)],
                                       c.inst.constraints[static_cast<std::size_t>(i)], a.x, a.lambda);
      worst = std::max(worst, (fresh - a.d).norm());
    }
  CHECK(worst <= 1e-12);
}

TEST_CASE("iterates stay in X and Q every round") {
  const Canonical c;
  RunOptions opts;
  opts.rounds = 500;
  const Trace t = run(c.inst, c.sched, c.ws, c.ss, copies(6, vec({3, -3})), copies(6, vec({5, -5})), opts);
  const DualSet ds = dual_set_of(c.inst);
  for (const auto& s : t.states)
    for (const auto& a : s.agents) {
      CHECK(c.inst.feasible_set.contains(a.x));
      CHECK(ds.contains(a.lambda, 1e-12));
    }
}

TEST_CASE("runs are deterministic") {
  const Canonical c;
  RunOptions opts;
  opts.rounds = 200;
  const Trace a = run(c.inst, c.sched, c.ws, c.ss, copies(6, vec({0, 0})), copies(6, vec({0, 0})), opts);
  const Trace b = run(c.inst, c.sched, c.ws, c.ss, copies(6, vec({0, 0})), copies(6, vec({0, 0})), opts);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) CHECK(same_state(a.states[k], b.states[k]));
}

TEST_CASE("trace length and recording stride") {
  const Canonical c;
  RunOptions opts;
  opts.rounds = 0;
  Trace t = run(c.inst, c.sched, c.ws, c.ss, copies(6, vec({0, 0})), copies(6, vec({0, 0})), opts);
  CHECK(t.states.size() == 1);
  CHECK(t.rows.size() == 1);
  CHECK(t.final_state().round == 0);

  opts.rounds = 25;
  opts.record_every = 10;
  t = run(c.inst, c.sched, c.ws, c.ss, copies(6, vec({0, 0})), copies(6, vec({0, 0})), opts);
  REQUIRE(t.states.size() == 4);
  CHECK(t.states[1].round == 10);
  CHECK(t.final_state().round == 25);
  CHECK(t.rows.back().k == 25);
  CHECK(t.alphas.size() == 26);
  CHECK(t.last_round() == 25);

  opts.rounds = 30;
  t = run(c.inst, c.sched, c.ws, c.ss, copies(6, vec({0, 0})), copies(6, vec({0, 0})), opts);
  CHECK(t.states.size() == 4);
}

TEST_CASE("canonical run reaches consensus") {
  const Canonical c;
  RunOptions opts;
  opts.rounds = 5000;
  opts.record_every = 1000;
  const Trace t = run(c.inst, c.sched, c.ws, c.ss, copies(6, vec({0, 0})), copies(6, vec({0, 0})), opts);
  CHECK(t.rows.back().consensus_x < 1e-2);
  CHECK(t.max_tracking_z <= 1e-9 * 6);
  CHECK(t.max_tracking_y <= 1e-9 * 6);
}

TEST_CASE("run checks its preconditions") {
  const Canonical c;
  RunOptions opts;
  opts.rounds = 5;
  const auto x0 = copies(6, vec({0, 0}));
  const auto l0 = copies(6, vec({0, 0}));

  WeightSchedule bad = c.ws;
  bad.row_weights[0](2, 2) += 0.1;
  CHECK_THROWS_AS(run(c.inst, c.sched, bad, c.ss, x0, l0, opts), PreconditionFailed);

  GraphSchedule weak = c.sched;
  weak.connectivity_window = 2;
  CHECK_THROWS_AS(run(c.inst, weak, c.ws, c.ss, x0, l0, opts), PreconditionFailed);

  CHECK_THROWS_AS(run(c.inst, c.sched, c.ws, StepSchedule{2, 0.4}, x0, l0, opts), InvalidArgument);
  opts.rounds = -1;
  CHECK_THROWS_AS(run(c.inst, c.sched, c.ws, c.ss, x0, l0, opts), RangeError);
}

TEST_CASE("non-finite values abort with the round index") {
  Canonical c;
  c.inst.objectives[3].a(0) = std::numeric_limits<double>::infinity();
  RunOptions opts;
  opts.rounds = 10;
  try {
    run(c.inst, c.sched, c.ws, c.ss, copies(6, vec({0, 0})), copies(6, vec({0, 0})), opts);
    FAIL("expected NonFiniteState");
  } catch (const NonFiniteState& e) {
    CHECK(e.round() == 0);
  }
}

TEST_CASE("dual ascent: a constraint that is always violated pushes lambda to the radius") {
  ProblemInstance inst = fixtures::blank_instance(1, 2, 0);
  inst.constraints[0].quad_offset = 1.0;  // |x|^2 + 1 > 0 everywhere
  inst.dual_radius = 3.0;
  const WeightSchedule trivial = uniform_weights(fixtures::self_loop_schedule(1));
  const CompiledWeights cw = CompiledWeights::compile(trivial);
  SwarmState s = init_state(inst, {vec({0.5, 0.5})}, {vec({0})});
  double previous = 0;
  for (int k = 0; k < 200; ++k) {
    s = step(s, inst, cw, step_size(StepSchedule{}, k));
    const double l = s.agents[0].lambda(0);
    CHECK(l >= previous);
    CHECK(l <= 3.0);
    previous = l;
  }
  CHECK(previous == 3.0);
}

TEST_CASE("single agent with unit weights is the centralized primal-dual method") {
  // Agent 0 of the canonical instance on its own.
  ProblemInstance one = canonical_instance(42);
  one.m = 1;
  one.objectives.resize(1);
  one.constraints.resize(1);
  const WeightSchedule trivial = uniform_weights(fixtures::self_loop_schedule(1));
  const CompiledWeights cw = CompiledWeights::compile(trivial);
  const StepSchedule ss{};
  const DualSet ds = dual_set_of(one);

  SwarmState s = init_state(one, {vec({0.3, -0.2})}, {vec({0, 0})});
  Vector x = vec({0.3, -0.2});
  Vector l = vec({0, 0});
  for (int k = 0; k < 100; ++k) {
    const double alpha = step_size(ss, k);
    const Vector gx = primal_grad(one.objectives[0], one.constraints[0], x, l);
    const Vector gl = eval_constraints(one.constraints[0], x);
    x = project_box(x - alpha * gx, one.feasible_set);
    l = project_dual(l + alpha * gl, ds);
    s = step(s, one, cw, alpha, Execution::serial);
    CHECK(s.agents[0].x == x);
    CHECK(s.agents[0].lambda == l);
  }
}

TEST_CASE("OpenMP step is bitwise identical to the serial reference") {
  GenerationOptions go;
  go.m = 96;
  go.n = 3;
  const ProblemInstance inst = generate_instance(5, go);
  const GraphSchedule sched = random_schedule(96, 3, 20, 9);
  const CompiledWeights cw = CompiledWeights::compile(uniform_weights(sched));
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  SwarmState serial = init_state_zeros(inst);
  SwarmState parallel = serial;
  SwarmState automatic = serial;
  for (int k = 0; k < 60; ++k) {
    const double alpha = step_size(StepSchedule{}, k);
    serial = step_serial(serial, inst, cw, alpha);
    parallel = step_parallel(parallel, inst, cw, alpha);
    automatic = step(automatic, inst, cw, alpha, Execution::automatic);
  }
  omp_set_num_threads(saved);
  CHECK(same_state(serial, parallel));
  CHECK(same_state(serial, automatic));
}

TEST_CASE("ergodic averages") {
  Trace t;
  for (int k = 0; k <= 10; ++k) {
    t.alphas.push_back(1.0);
    t.mean_x.push_back(vec({static_cast<double>(k), 1.0}));
  }
  const StepSchedule constant{1.0, 0.0};
  CHECK(ergodic_average(t, 2, 6, constant) == vec({4.0, 1.0}));
  CHECK((ergodic_average(t, 7, 7, StepSchedule{}) - vec({7.0, 1.0})).norm() <= 1e-15);
  CHECK_THROWS_AS(ergodic_average(t, 5, 11, constant), RangeError);
  CHECK_THROWS_AS(ergodic_average(t, 6, 5, constant), RangeError);

  Trace flat;
  for (int k = 0; k <= 50; ++k) {
    flat.alphas.push_back(step_size(StepSchedule{}, k));
    flat.mean_x.push_back(vec({-0.5, 2.0}));
  }
  CHECK((ergodic_average(flat, 0, 50, StepSchedule{}) - vec({-0.5, 2.0})).norm() <= 1e-15);
}
