#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainsynth {

using StateIndex = std::uint32_t;

/// Raised when a model, family or query violates its structural invariants.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Absolute tolerance on probability mass when validating distributions.
inline constexpr double kDistributionTolerance = 1e-9;

struct Transition {
    StateIndex target;
    double probability;

    friend bool operator==(const Transition&, const Transition&) = default;
};

/// Sparse probability distribution over state indices.
///
/// Entries are kept sorted by target with duplicates merged, so two
/// distributions with the same support and masses compare equal.
class Distribution {
public:
    Distribution() = default;

    /// Merges duplicate targets and validates the result; throws ModelError
    /// on non-positive masses or when the total differs from one.
    explicit Distribution(std::vector<Transition> entries);

    static Distribution dirac(StateIndex target);

    [[nodiscard]] const std::vector<Transition>& entries() const { return _entries; }
    [[nodiscard]] std::size_t size() const { return _entries.size(); }
    [[nodiscard]] bool empty() const { return _entries.empty(); }
    [[nodiscard]] double probability_of(StateIndex target) const;

    auto begin() const { return _entries.begin(); }
    auto end() const { return _entries.end(); }

    friend bool operator==(const Distribution&, const Distribution&) = default;

private:
    std::vector<Transition> _entries;
};

/// Dense membership set over a contiguous state index space.
class StateSet {
public:
    StateSet() = default;
    explicit StateSet(std::size_t universe) : _bits(universe, false) {}
    StateSet(std::size_t universe, const std::vector<StateIndex>& members);

    [[nodiscard]] std::size_t universe() const { return _bits.size(); }
    [[nodiscard]] bool contains(StateIndex s) const { return s < _bits.size() && _bits[s]; }
    void insert(StateIndex s);
    void erase(StateIndex s);
    [[nodiscard]] std::size_t count() const;
    [[nodiscard]] bool empty() const { return count() == 0; }
    [[nodiscard]] std::vector<StateIndex> members() const;
    /// Same members over a universe of `universe` states (must not drop any).
    [[nodiscard]] StateSet resized(std::size_t universe) const;

    friend bool operator==(const StateSet&, const StateSet&) = default;

private:
    std::vector<bool> _bits;
};

class MarkovChain {
public:
    MarkovChain() = default;
    MarkovChain(StateIndex initial, std::vector<Distribution> rows);

    [[nodiscard]] std::size_t num_states() const { return _rows.size(); }
    [[nodiscard]] StateIndex initial() const { return _initial; }
    [[nodiscard]] const Distribution& row(StateIndex s) const { return _rows[s]; }
    [[nodiscard]] const std::vector<Distribution>& rows() const { return _rows; }
    [[nodiscard]] std::size_t num_transitions() const;

    friend bool operator==(const MarkovChain&, const MarkovChain&) = default;

private:
    StateIndex _initial = 0;
    std::vector<Distribution> _rows;
};

struct Action {
    std::string label;
    Distribution distribution;
};

class Mdp {
public:
    Mdp() = default;
    Mdp(StateIndex initial, std::vector<std::vector<Action>> actions);

    /// The degenerate MDP with one action per state.
    static Mdp from_chain(const MarkovChain& chain);

    [[nodiscard]] std::size_t num_states() const { return _actions.size(); }
    [[nodiscard]] StateIndex initial() const { return _initial; }
    [[nodiscard]] const std::vector<Action>& actions(StateIndex s) const { return _actions[s]; }
    [[nodiscard]] std::size_t num_choices() const;

    /// Converts back to a chain; requires exactly one action per state.
    [[nodiscard]] MarkovChain to_chain() const;

private:
    StateIndex _initial = 0;
    std::vector<std::vector<Action>> _actions;
};

enum class ComparisonOp { Less, LessEqual, GreaterEqual, Greater };

[[nodiscard]] std::string to_string(ComparisonOp op);
[[nodiscard]] bool is_upper_bound(ComparisonOp op);

/// Default slack for threshold comparisons.
inline constexpr double kDefaultTolerance = 1e-6;

/// Applies the tolerant comparison policy: `>= l` holds when value >= l - tol,
/// `> l` when value > l + tol, mirrored for the upper-bound operators.
[[nodiscard]] bool compare(double value, ComparisonOp op, double threshold, double tolerance);

/// Reachability property P~threshold(F goal).
struct Specification {
    StateSet goal;
    ComparisonOp op = ComparisonOp::GreaterEqual;
    double threshold = 0.0;
    double tolerance = kDefaultTolerance;

    /// Throws ModelError unless the goal is a nonempty subset of a model with
    /// `num_states` states and the threshold lies in [0, 1].
    void validate(std::size_t num_states) const;
};

inline constexpr std::size_t kNoChoice = std::numeric_limits<std::size_t>::max();

/// Memoryless deterministic scheduler: one action index per state.
struct MemorylessScheduler {
    std::vector<std::size_t> choice;
};

/// Writes `state i: p1 -> j1, p2 -> j2` lines.
void dump(std::ostream& out, const MarkovChain& chain);
void dump(std::ostream& out, const Mdp& mdp);

} // namespace chainsynth
