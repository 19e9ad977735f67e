#include <benchmark/benchmark.h>

#include "nego/generate.hpp"
#include "nego/games.hpp"
#include "nego/patterns.hpp"
#include "nego/reach.hpp"
#include "nego/weak.hpp"

using namespace nego;

static void BM_DetSoundness(benchmark::State& state) {
    Negotiation neg = gen_sound_workflow(static_cast<uint32_t>(state.range(0)), 100, 2024);
    for (auto _ : state) {
        auto verdict = det_soundness(neg);
        benchmark::DoNotOptimize(verdict.sound);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DetSoundness)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_BuildReach(benchmark::State& state) {
    GenParams params;
    params.nodes = static_cast<uint32_t>(state.range(0));
    params.procs = 3;
    params.deterministic = false;
    params.weakly_nd = true;
    Negotiation neg = gen_random(params, 7);
    for (auto _ : state) {
        ReachGraph graph(neg, 10000000);
        benchmark::DoNotOptimize(graph.size());
    }
}
BENCHMARK(BM_BuildReach)->Arg(8)->Arg(12)->Unit(benchmark::kMicrosecond);

static void BM_WeakSoundness(benchmark::State& state) {
    GenParams params;
    params.nodes = static_cast<uint32_t>(state.range(0));
    params.procs = 3;
    params.deterministic = false;
    params.weakly_nd = true;
    Negotiation neg = gen_random(params, 11);
    for (auto _ : state) {
        auto verdict = weak_soundness(neg);
        benchmark::DoNotOptimize(verdict.sound);
    }
}
BENCHMARK(BM_WeakSoundness)->Arg(8)->Arg(10)->Unit(benchmark::kMicrosecond);

static void BM_SolveOmitting(benchmark::State& state) {
    Negotiation neg = gen_sound_workflow(static_cast<uint32_t>(state.range(0)), 8, 5);
    OmitSolver solver(neg);
    OmitInstance inst;
    inst.include = {{neg.node_count() / 2, neg.out[neg.node_count() / 2].empty()
                                               ? 0
                                               : neg.out[neg.node_count() / 2][0]}};
    for (auto _ : state) {
        auto plan = solver.solve(inst);
        benchmark::DoNotOptimize(plan.has_value());
    }
}
BENCHMARK(BM_SolveOmitting)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);

static void BM_CnfGadgetOracle(benchmark::State& state) {
    Cnf3 f{3, {{{1, 2, 3}}, {{-1, -2, -3}}, {{1, -2, 3}}}};
    Negotiation neg = gen_from_cnf(f);
    for (auto _ : state) {
        auto verdict = oracle_sound(neg, 10000000);
        benchmark::DoNotOptimize(verdict.sound);
    }
}
BENCHMARK(BM_CnfGadgetOracle)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
