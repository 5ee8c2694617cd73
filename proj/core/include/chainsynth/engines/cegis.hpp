#pragma once

#include "chainsynth/engines/synthesis.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace chainsynth {

enum class ExtractionMode { Refute, Establish };

/// Greedy critical subsystem: {s0} plus the shortest prefix of the reachable
/// non-goal states, ranked by expected visits times Pr(s reaches G), whose
/// sub-MC alone violates (Refute) or satisfies (Establish) the specification.
/// Throws ModelError when the chain's verdict or the operator does not fit
/// the mode.
[[nodiscard]] StateSet extract_counterexample(const MarkovChain& chain, const Specification& spec,
                                              ExtractionMode mode, const SolverOptions& options = {});

/// Holes read by the rows of the states in `critical`.
[[nodiscard]] std::vector<HoleId> conflict_holes(const Family& fam, const StateSet& critical);

enum class ClauseVerdict { Accept, Reject, Excluded };

struct Literal {
    HoleId hole;
    std::vector<OptionIndex> options;   // sorted
};

/// Every realisation whose value at each literal's hole lies in its option
/// set shares the verdict.
struct LearnedClause {
    std::vector<Literal> literals;
    ClauseVerdict verdict = ClauseVerdict::Reject;

    [[nodiscard]] bool matches(const Realisation& r) const;
};

/// Options of the conflict holes that behave like the candidate's on every
/// critical row, so the clause covers all of them.
[[nodiscard]] LearnedClause generalise(const Family& fam, const Realisation& candidate, const StateSet& critical,
                                       ClauseVerdict verdict);

/// Search space of the synthesiser: one domain per hole, the family
/// constraints, an optional option-sum budget, and the learned clauses.
class AssignmentSpace {
public:
    AssignmentSpace(const Family& fam, const Subfamily& scope, std::optional<std::uint64_t> option_sum_budget = {});

    void learn(LearnedClause clause);
    /// Marks the candidate's options as most recently refuted.
    void note_refuted(const Realisation& r);

    /// A total assignment within scope, satisfying the constraints and the
    /// budget, and matched by no learned clause; nullopt once exhausted.
    [[nodiscard]] std::optional<Realisation> next_candidate();

    /// Verdict of the first learned clause matching `r`.
    [[nodiscard]] std::optional<ClauseVerdict> classify(const Realisation& r) const;
    [[nodiscard]] const std::vector<LearnedClause>& clauses() const { return _clauses; }

private:
    using Domains = std::vector<std::vector<bool>>;

    bool propagate(Domains& d) const;
    bool search(Domains& d, Realisation& out) const;

    const Family* _family;
    std::optional<std::uint64_t> _budget;
    Domains _root;
    std::vector<LearnedClause> _clauses;
    std::vector<std::vector<std::uint64_t>> _refuted_at;
    std::uint64_t _clock = 0;
};

/// Learned clauses of a run, for inspection.
struct CegisDiagnostics {
    std::vector<LearnedClause> clauses;
};

/// Counterexample-guided inductive synthesis.
[[nodiscard]] SynthesisOutcome cegis_solve(const Family& fam, const SynthesisQuery& query,
                                           CegisDiagnostics* diagnostics = nullptr);

} // namespace chainsynth
