#pragma once

#include "chainsynth/family.hpp"
#include "chainsynth/sketch/ast.hpp"

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

namespace chainsynth::sketch {

using Valuation = std::vector<std::int64_t>;
using Value = std::variant<std::int64_t, bool>;

/// Default cap on explored valuations.
inline constexpr std::size_t kDefaultMaxStates = 1000000;

struct ElaborationOptions {
    std::size_t max_states = kDefaultMaxStates;
};

struct ElaboratedSketch {
    Family family;
    std::vector<std::string> variables;
    /// valuations[s] is the variable valuation of family state s.
    std::vector<Valuation> valuations;
};

/// Throws SketchError unless guards are boolean, updates and options are
/// integer, and probabilities are constant numeric expressions.
void type_check(const SketchProgram& prog);

/// Integer or boolean value of `e`. A hole reference evaluates its assigned
/// option's expression in the same valuation.
[[nodiscard]] Value eval_expr(const SketchProgram& prog, const Expr& e, const Valuation& valuation,
                              const PartialAssignment& assignment);

/// Value of a constant probability expression (rationals allowed).
[[nodiscard]] double eval_probability(const Expr& e);

/// Builds the family over all valuations reachable under some hole choice.
///
/// Guards that read holes are supported as long as every hole combination
/// enables exactly one command; rows then couple the commands' branches by
/// cumulative probability so that each realisation gets the intended
/// distribution.
[[nodiscard]] ElaboratedSketch elaborate(const SketchProgram& prog, const ElaborationOptions& options = {});

/// States whose valuation satisfies the boolean predicate `goal`.
[[nodiscard]] StateSet goal_states(const SketchProgram& prog, const ElaboratedSketch& sketch, const Expr& goal);
[[nodiscard]] StateSet goal_states(const SketchProgram& prog, const ElaboratedSketch& sketch, std::string_view goal);

} // namespace chainsynth::sketch
