#pragma once

#include "chainsynth/family.hpp"
#include "chainsynth/model.hpp"

#include <cstdint>
#include <map>
#include <variant>
#include <vector>

namespace chainsynth {

/// Default cap on the number of members folded into an all-in-one MDP.
inline constexpr std::uint64_t kAllInOneBound = 100000;

struct AllInOneMdp {
    Mdp mdp;
    /// Initial action i selects realisations[i].
    std::vector<Realisation> realisations;
    std::size_t family_states = 0;

    /// Index of the copy of family state `s` belonging to realisations[r].
    [[nodiscard]] StateIndex state_of(StateIndex s, std::size_t r) const {
        return static_cast<StateIndex>(1 + r * family_states + s);
    }
};

/// Fresh initial state 0 branching into one copy of D_r per member.
/// Throws ModelError above `bound` members.
[[nodiscard]] AllInOneMdp all_in_one_mdp(const Family& fam, std::uint64_t bound = kAllInOneBound);

/// Per-action record of which option each relevant hole takes.
struct HoleChoice {
    HoleId hole;
    OptionIndex option;

    friend bool operator==(const HoleChoice&, const HoleChoice&) = default;
};

struct QuotientMdp {
    Mdp mdp;
    /// choices[s][a]: the hole options instantiated by action a of state s.
    std::vector<std::vector<std::vector<HoleChoice>>> choices;
    /// The fresh initial state; family state s keeps index s.
    StateIndex fresh_initial = 0;
    std::size_t num_holes = 0;
    Subfamily subfamily;
};

/// Quotient over a subfamily: at each state, one action per combination of
/// the remaining options of the holes that state reads.
[[nodiscard]] QuotientMdp quotient_mdp(const Family& fam, const Subfamily& sub);

/// Per-hole tally of options picked across reachable states.
struct HoleUsage {
    HoleId hole;
    std::map<OptionIndex, std::size_t> frequency;   // option -> number of states
};

struct Consistent {
    Realisation realisation;
};

struct Inconsistent {
    /// Only holes with at least two chosen options, by increasing id.
    std::vector<HoleUsage> holes;
};

using ConsistencyVerdict = std::variant<Consistent, Inconsistent>;

/// Checks whether the scheduler picks a single option per hole on `reachable`.
/// Unused holes complete with their first remaining option.
[[nodiscard]] ConsistencyVerdict scheduler_consistency(const QuotientMdp& quotient, const MemorylessScheduler& sched,
                                                       const StateSet& reachable);

} // namespace chainsynth
