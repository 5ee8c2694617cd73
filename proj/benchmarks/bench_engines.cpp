#include "chainsynth/engines/random_family.hpp"
#include "chainsynth/engines/synthesis.hpp"

#include <benchmark/benchmark.h>

using namespace chainsynth;

namespace {

void partition(benchmark::State& state, EngineKind engine, const RandomInstance& inst) {
    SynthesisQuery q;
    q.kind = QueryKind::Partition;
    q.spec = inst.spec;
    std::uint64_t checks = 0;
    for (auto _ : state) {
        SynthesisOutcome out = solve(engine, inst.family, q);
        checks = out.stats.checks;
        benchmark::DoNotOptimize(out);
    }
    state.counters["checks"] = static_cast<double>(checks);
}

void BM_PruningInstance(benchmark::State& state) {
    auto side = static_cast<std::size_t>(state.range(1));
    partition(state, static_cast<EngineKind>(state.range(0)), pruning_instance(side, side));
}

void BM_RandomFamily(benchmark::State& state) {
    RandomFamilyParams p;
    p.max_states = 100;
    p.max_realisations = 1000;
    p.max_holes = 6;
    // Two fixed seeds from the agreement sweep.
    RandomInstance inst = random_instance(static_cast<std::uint64_t>(state.range(1)), p);
    partition(state, static_cast<EngineKind>(state.range(0)), inst);
}

} // namespace

BENCHMARK(BM_PruningInstance)
    ->ArgNames({"engine", "side"})
    ->ArgsProduct({{0, 1, 2}, {10, 30, 100}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RandomFamily)->ArgNames({"engine", "seed"})->ArgsProduct({{0, 1, 2}, {3, 17}})->Unit(benchmark::kMillisecond);
