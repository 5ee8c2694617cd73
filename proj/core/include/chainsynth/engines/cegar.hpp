#pragma once

#include "chainsynth/engines/synthesis.hpp"
#include "chainsynth/quotient.hpp"

#include <utility>

namespace chainsynth {

/// Splits `sub` on the hole with the most scheduler-chosen options (lowest id
/// on ties). The first part keeps the more frequently chosen half of those
/// options, the second everything else. Throws on a Consistent verdict.
[[nodiscard]] std::pair<Subfamily, Subfamily> split(const Subfamily& sub, const ConsistencyVerdict& verdict);

/// Removes one member: the parts pin holes before i to r and exclude r(i)
/// at hole i. Together they cover `sub` minus r.
[[nodiscard]] std::vector<Subfamily> split_off(const Subfamily& sub, const Realisation& r);

/// Folds constraints that are conjunctions of single-hole formulas into
/// `sub`. Throws ModelError for anything else. Returns nullopt when some
/// hole has no admissible option left.
[[nodiscard]] std::optional<Subfamily> fold_constraints(const Family& fam, const Subfamily& sub);

/// Quotient bounds of one subfamily.
struct QuotientBounds {
    ExtremalResult min;
    ExtremalResult max;
    QuotientMdp quotient;
};

[[nodiscard]] QuotientBounds quotient_bounds(const Family& fam, const Subfamily& sub, const StateSet& goal,
                                             const SolverOptions& options = {});

/// Abstraction refinement over quotient MDPs.
[[nodiscard]] SynthesisOutcome cegar_solve(const Family& fam, const SynthesisQuery& query);

} // namespace chainsynth
