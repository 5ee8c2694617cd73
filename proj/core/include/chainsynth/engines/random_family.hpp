#pragma once

#include "chainsynth/family.hpp"
#include "chainsynth/model.hpp"

#include <cstdint>

namespace chainsynth {

struct RandomFamilyParams {
    std::size_t min_states = 3;
    std::size_t max_states = 12;
    std::size_t max_holes = 4;
    std::size_t max_options = 4;
    std::uint64_t max_realisations = 256;
    std::size_t max_branches = 3;
    /// Chance that a branch target is a hole rather than a fixed state.
    double hole_branch_probability = 0.4;
    /// Chance that a hole-dependent branch reads two holes.
    double two_hole_probability = 0.15;
    /// Number of random constraints; zero keeps the family unconstrained.
    std::size_t constraints = 0;
    /// Only single-hole constraints, so that CEGAR can fold them.
    bool decomposable_constraints = true;
    std::uint64_t max_cost = 5;
};

struct RandomInstance {
    Family family;
    Specification spec;
};

/// Deterministic in `seed`. Thresholds are drawn so that mixed verdicts are
/// likely; goals are nonempty.
[[nodiscard]] RandomInstance random_instance(std::uint64_t seed, const RandomFamilyParams& params = {});

/// Instance where most options lead straight into the goal (an unsafe state):
/// a root hole with `outer` options at the initial state, all but the last
/// jumping to the goal, and, when `inner` > 0, a second hole behind the good
/// option with the same shape. The spec P<=0.5 [F goal] holds only for the
/// all-last realisation.
[[nodiscard]] RandomInstance pruning_instance(std::size_t outer, std::size_t inner);

} // namespace chainsynth
