#include "chainsynth/checker.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace chainsynth;

namespace {

// Birth-death chain with a few random shortcuts; goal is the last state.
MarkovChain ladder(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<StateIndex> any(0, static_cast<StateIndex>(n - 1));
    std::vector<Distribution> rows;
    for (StateIndex s = 0; s + 1 < n; ++s) {
        StateIndex down = s == 0 ? 0 : s - 1;
        rows.emplace_back(std::vector<Transition>{{s + 1, 0.45}, {down, 0.45}, {any(rng), 0.1}});
    }
    rows.push_back(Distribution::dirac(static_cast<StateIndex>(n - 1)));
    return MarkovChain(0, std::move(rows));
}

void run(benchmark::State& state, SolveMethod method) {
    auto n = static_cast<std::size_t>(state.range(0));
    MarkovChain chain = ladder(n, 1);
    StateSet goal(n, {static_cast<StateIndex>(n - 1)});
    for (auto _ : state) {
        benchmark::DoNotOptimize(reach_probability(chain, goal, {method}));
    }
    state.SetComplexityN(state.range(0));
}

void BM_ReachDirect(benchmark::State& state) { run(state, SolveMethod::Direct); }
void BM_ReachValueIteration(benchmark::State& state) { run(state, SolveMethod::ValueIteration); }

void BM_MdpMax(benchmark::State& state) {
    auto n = static_cast<std::size_t>(state.range(0));
    MarkovChain a = ladder(n, 1);
    MarkovChain b = ladder(n, 2);
    std::vector<std::vector<Action>> actions(n);
    for (StateIndex s = 0; s < n; ++s) {
        actions[s] = {{"a", a.row(s)}, {"b", b.row(s)}};
    }
    Mdp mdp(0, actions);
    StateSet goal(n, {static_cast<StateIndex>(n - 1)});
    for (auto _ : state) {
        benchmark::DoNotOptimize(mdp_extremal(mdp, goal, OptimizationDirection::Maximize));
    }
}

} // namespace

BENCHMARK(BM_ReachDirect)->RangeMultiplier(4)->Range(16, 4096)->Complexity();
BENCHMARK(BM_ReachValueIteration)->RangeMultiplier(4)->Range(16, 1024)->Complexity();
BENCHMARK(BM_MdpMax)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK_MAIN();
