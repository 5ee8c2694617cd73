#pragma once

#include "chainsynth/model.hpp"

#include <cstddef>
#include <vector>

namespace chainsynth {

enum class SolveMethod { Automatic, Direct, ValueIteration };

struct SolverOptions {
    SolveMethod method = SolveMethod::Automatic;
    /// Automatic switches from the sparse direct solve to value iteration
    /// above this many undetermined states.
    std::size_t direct_limit = 10000;
    double vi_tolerance = 1e-10;
    std::size_t vi_max_sweeps = 1000000;
};

// Qualitative precomputation on chains.

/// States with no path into `goal`.
[[nodiscard]] StateSet prob0_states(const MarkovChain& chain, const StateSet& goal);
/// States that reach `goal` almost surely.
[[nodiscard]] StateSet prob1_states(const MarkovChain& chain, const StateSet& goal);

/// States reachable from `from` (inclusive).
[[nodiscard]] StateSet reachable_states(const MarkovChain& chain, StateIndex from);
[[nodiscard]] StateSet reachable_states(const Mdp& mdp, StateIndex from, const MemorylessScheduler& sched);

/// Probability of eventually reaching `goal`, one entry per state.
///
/// Prob-0 and prob-1 states are fixed graph-theoretically; the remaining
/// states solve x = P x + b.
[[nodiscard]] std::vector<double> reach_probability(const MarkovChain& chain, const StateSet& goal,
                                                    const SolverOptions& options = {});

struct CheckResult {
    bool holds;
    double value;
};

[[nodiscard]] CheckResult check(const MarkovChain& chain, const Specification& spec,
                                const SolverOptions& options = {});

enum class OptimizationDirection { Minimize, Maximize };

struct ExtremalResult {
    double value;                          // at the initial state
    std::vector<double> values;            // per state
    MemorylessScheduler scheduler;
};

/// Optimal reachability probability over all schedulers, with a memoryless
/// deterministic scheduler attaining it.
[[nodiscard]] ExtremalResult mdp_extremal(const Mdp& mdp, const StateSet& goal, OptimizationDirection dir,
                                          const SolverOptions& options = {});

/// Chain obtained by fixing the scheduler's choice in every state. Missing
/// choices are tolerated only in states the scheduler cannot reach.
[[nodiscard]] MarkovChain induced_chain(const Mdp& mdp, const MemorylessScheduler& sched);

/// Sub-chain on the critical set: rows of `critical` are kept, every other
/// state becomes absorbing. Indices are preserved.
[[nodiscard]] MarkovChain sub_mc(const MarkovChain& chain, const StateSet& critical);

} // namespace chainsynth
