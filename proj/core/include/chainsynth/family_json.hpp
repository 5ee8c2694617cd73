#pragma once

#include "chainsynth/family.hpp"

#include <string>
#include <string_view>

namespace chainsynth {

/// JSON family format:
///
///   {"states": 5, "init": 0, "cost_model": "option-sum",
///    "holes": [{"name": "k2", "options": ["2", "3"], "costs": [0, 0]}],
///    "transitions": [{"from": 0, "branches": [{"p": 0.5, "fixed": 1},
///                                             {"p": 0.5, "hole": "k2", "table": [2, 3]}]}],
///    "constraints": ["(=> (= k2 \"2\") (not (= k3 \"2\")))"]}
///
/// Branches over several holes use `"holes": [...]` with a mixed-radix table.
/// Writing a family read from canonical text reproduces the text exactly.
[[nodiscard]] Family family_from_json(std::string_view text);
[[nodiscard]] std::string family_to_json(const Family& fam, int indent = 2);

/// Constraint s-expressions: `true`, `false`, `(= hole "option")`, `(not f)`,
/// `(and f...)`, `(or f...)`, `(=> f g)`, `(<=> f g)`.
[[nodiscard]] Formula parse_constraint(const std::vector<Hole>& holes, std::string_view text);
[[nodiscard]] std::string format_constraint(const std::vector<Hole>& holes, const Formula& f);

} // namespace chainsynth
