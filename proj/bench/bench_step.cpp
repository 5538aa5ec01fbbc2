#include <benchmark/benchmark.h>

#include "pushpull/engine.hpp"
#include "pushpull/network.hpp"
#include "pushpull/problem.hpp"

using namespace pushpull;

namespace {

struct Setup {
  ProblemInstance inst;
  CompiledWeights weights;
  SwarmState state;
};

Setup make_setup(int m) {
  GenerationOptions opts;
  opts.m = m;
  Setup s{generate_instance(42, opts), {}, {}};
  s.weights = CompiledWeights::compile(uniform_weights(random_schedule(m, 4, 2, 7)));
  s.state = init_state_zeros(s.inst);
  // Move away from the symmetric start so every agent does real work.
  for (int k = 0; k < 8; ++k) s.state = step_serial(s.state, s.inst, s.weights, step_size(StepSchedule{}, k));
  return s;
}

template <SwarmState (*Step)(const SwarmState&, const ProblemInstance&, const CompiledWeights&, double)>
void bench_step(benchmark::State& bs) {
  const Setup s = make_setup(static_cast<int>(bs.range(0)));
  const double alpha = step_size(StepSchedule{}, s.state.round);
  for (auto _ : bs) {
    SwarmState next = Step(s.state, s.inst, s.weights, alpha);
    benchmark::DoNotOptimize(next);
  }
  bs.SetItemsProcessed(bs.iterations() * bs.range(0));
}

}  // namespace

BENCHMARK(bench_step<step_serial>)->Name("step/serial")->Arg(6)->Arg(256)->Arg(4096)->UseRealTime();
BENCHMARK(bench_step<step_parallel>)->Name("step/parallel")->Arg(6)->Arg(256)->Arg(4096)->UseRealTime();

BENCHMARK_MAIN();
