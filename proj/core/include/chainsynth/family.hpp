#pragma once

#include "chainsynth/model.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace chainsynth {

using HoleId = std::size_t;
using OptionIndex = std::size_t;

struct Hole {
    std::string name;
    std::vector<std::string> options;   // labels, distinct within the hole
    std::vector<std::uint64_t> costs;   // one per option

    friend bool operator==(const Hole&, const Hole&) = default;
};

struct FixedTarget {
    StateIndex state;

    friend bool operator==(const FixedTarget&, const FixedTarget&) = default;
};

/// Successor chosen by a set of holes. `table` is indexed in mixed radix over
/// the holes' full option lists, the first hole being most significant.
/// A single hole with an identity table is a plain state-valued parameter.
struct HoleTarget {
    std::vector<HoleId> holes;   // sorted, distinct
    std::vector<StateIndex> table;

    friend bool operator==(const HoleTarget&, const HoleTarget&) = default;
};

using Target = std::variant<FixedTarget, HoleTarget>;

struct Branch {
    double probability;
    Target target;

    friend bool operator==(const Branch&, const Branch&) = default;
};

/// Total assignment hole -> option index.
struct Realisation {
    std::vector<OptionIndex> options;

    friend bool operator==(const Realisation&, const Realisation&) = default;
    friend auto operator<=>(const Realisation&, const Realisation&) = default;
};

/// Assignment where some holes may still be open.
using PartialAssignment = std::vector<std::optional<OptionIndex>>;

/// Propositional formula over atoms `hole = option`.
struct Formula {
    enum class Kind { True, False, Atom, Not, And, Or, Implies, Iff };

    Kind kind = Kind::True;
    HoleId hole = 0;
    OptionIndex option = 0;
    std::vector<Formula> args;

    static Formula constant(bool value);
    static Formula atom(HoleId hole, OptionIndex option);
    static Formula negation(Formula f);
    static Formula conjunction(std::vector<Formula> fs);
    static Formula disjunction(std::vector<Formula> fs);
    static Formula implication(Formula lhs, Formula rhs);
    static Formula equivalence(Formula lhs, Formula rhs);

    [[nodiscard]] bool evaluate(const Realisation& r) const;
    /// Three-valued evaluation; nullopt when open holes decide the outcome.
    [[nodiscard]] std::optional<bool> evaluate(const PartialAssignment& a) const;
    /// Holes mentioned by atoms, sorted and distinct.
    [[nodiscard]] std::vector<HoleId> holes() const;

    friend bool operator==(const Formula&, const Formula&) = default;
};

enum class CostModel { Structural, OptionSum };

[[nodiscard]] std::string to_string(CostModel model);

/// Restriction of every hole to a nonempty subset of its options.
class Subfamily {
public:
    Subfamily() = default;
    explicit Subfamily(std::vector<std::vector<OptionIndex>> remaining);

    [[nodiscard]] std::size_t num_holes() const { return _remaining.size(); }
    [[nodiscard]] const std::vector<OptionIndex>& options(HoleId h) const { return _remaining[h]; }
    [[nodiscard]] const std::vector<std::vector<OptionIndex>>& remaining() const { return _remaining; }
    [[nodiscard]] bool allows(HoleId h, OptionIndex o) const;
    [[nodiscard]] bool contains(const Realisation& r) const;
    /// Number of assignments in the product, ignoring constraints; saturates.
    [[nodiscard]] std::uint64_t product_size() const;
    [[nodiscard]] bool is_singleton() const;
    /// The only member when is_singleton().
    [[nodiscard]] Realisation singleton() const;

    /// Copy with hole `h` restricted to `options` (sorted on the way in).
    [[nodiscard]] Subfamily restricted(HoleId h, std::vector<OptionIndex> options) const;

    friend bool operator==(const Subfamily&, const Subfamily&) = default;

private:
    std::vector<std::vector<OptionIndex>> _remaining;
};

class Family {
public:
    Family() = default;
    /// Validates every structural invariant; throws ModelError otherwise.
    Family(std::size_t num_states, StateIndex initial, std::vector<Hole> holes, std::vector<std::vector<Branch>> rows,
           std::vector<Formula> constraints = {}, CostModel cost_model = CostModel::OptionSum);

    [[nodiscard]] std::size_t num_states() const { return _rows.size(); }
    [[nodiscard]] StateIndex initial() const { return _initial; }
    [[nodiscard]] const std::vector<Hole>& holes() const { return _holes; }
    [[nodiscard]] const Hole& hole(HoleId h) const { return _holes[h]; }
    [[nodiscard]] std::size_t num_holes() const { return _holes.size(); }
    [[nodiscard]] const std::vector<Branch>& row(StateIndex s) const { return _rows[s]; }
    [[nodiscard]] const std::vector<std::vector<Branch>>& rows() const { return _rows; }
    [[nodiscard]] const std::vector<Formula>& constraints() const { return _constraints; }
    [[nodiscard]] CostModel cost_model() const { return _cost_model; }

    [[nodiscard]] std::optional<HoleId> find_hole(const std::string& name) const;
    [[nodiscard]] std::optional<OptionIndex> find_option(HoleId h, const std::string& label) const;

    /// Holes read by the row of `s`, sorted and distinct.
    [[nodiscard]] std::vector<HoleId> holes_of_state(StateIndex s) const;

    [[nodiscard]] Subfamily full_subfamily() const;
    [[nodiscard]] bool satisfies_constraints(const Realisation& r) const;
    /// Throws ModelError when `r` is not a total, in-range assignment.
    void validate_realisation(const Realisation& r) const;

    /// Product of option counts, ignoring constraints; saturates.
    [[nodiscard]] std::uint64_t design_space_size() const;

    friend bool operator==(const Family&, const Family&) = default;

private:
    StateIndex _initial = 0;
    std::vector<Hole> _holes;
    std::vector<std::vector<Branch>> _rows;
    std::vector<Formula> _constraints;
    CostModel _cost_model = CostModel::OptionSum;
};

/// Successor of `target` under `r`.
[[nodiscard]] StateIndex resolve(const Family& fam, const HoleTarget& target, const Realisation& r);
[[nodiscard]] StateIndex resolve(const Family& fam, const Target& target, const Realisation& r);

/// Row distribution of state `s` under `r`.
[[nodiscard]] Distribution realise_row(const Family& fam, StateIndex s, const Realisation& r);

/// The chain D_r; throws ModelError on incomplete or constraint-violating `r`.
[[nodiscard]] MarkovChain realise(const Family& fam, const Realisation& r);

/// Lexicographic walk over the constraint-satisfying members of a subfamily,
/// the last hole varying fastest.
class RealisationEnumerator {
public:
    RealisationEnumerator(const Family& fam, Subfamily sub);

    std::optional<Realisation> next();

private:
    const Family* _family;
    Subfamily _sub;
    std::vector<std::size_t> _cursor;
    bool _done = false;
};

[[nodiscard]] std::vector<Realisation> enumerate_realisations(const Family& fam, const Subfamily& sub);
[[nodiscard]] std::uint64_t count_realisations(const Family& fam, const Subfamily& sub);

[[nodiscard]] std::uint64_t cost(const Family& fam, const Realisation& r, CostModel model);
[[nodiscard]] inline std::uint64_t cost(const Family& fam, const Realisation& r) {
    return cost(fam, r, fam.cost_model());
}

/// `k2=2,k3=4`
[[nodiscard]] std::string to_string(const Family& fam, const Realisation& r);
/// Parses `hole=option,...`; requires every hole exactly once.
[[nodiscard]] Realisation parse_assignment(const Family& fam, const std::string& text);

} // namespace chainsynth
