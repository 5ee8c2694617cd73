#pragma once

#include "chainsynth/engines/synthesis.hpp"

#include <utility>

namespace chainsynth {

/// Checks every member individually; the reference the other engines are
/// compared against. Ignores `cost_optimal` (see solve()).
[[nodiscard]] SynthesisOutcome enum_solve(const Family& fam, const SynthesisQuery& query);

/// Cheapest member of T, lexicographic tie-break; nullopt when T is empty.
[[nodiscard]] std::optional<std::pair<Realisation, std::uint64_t>> cost_optimal(const Family& fam,
                                                                                const Specification& spec,
                                                                                const SynthesisQuery& base = {});

} // namespace chainsynth
