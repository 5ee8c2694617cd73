#pragma once

#include "chainsynth/checker.hpp"
#include "chainsynth/family.hpp"
#include "chainsynth/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace chainsynth {

enum class QueryKind { Feasibility, Partition, Max, Min, EpsOptimal };

[[nodiscard]] std::string to_string(QueryKind kind);

/// Values closer than this are treated as ties when ranking realisations.
inline constexpr double kValueTieTolerance = 1e-9;

/// Default cap on the realisations an enumeration may visit.
inline constexpr std::uint64_t kEnumerationBound = 1000000;

struct SynthesisQuery {
    QueryKind kind = QueryKind::Feasibility;
    /// Max, Min and EpsOptimal read only the goal.
    Specification spec;
    double epsilon = 0.0;
    std::optional<std::uint64_t> budget;
    /// Overrides the family's cost model when set.
    std::optional<CostModel> cost_model;
    /// Feasibility: cheapest member of T. Partition: adds the cheapest member
    /// of T as witness. Max/Min: cheapest among the value-optimal members.
    bool cost_optimal = false;
    /// Restricts the search; empty means the whole family.
    std::optional<Subfamily> scope;
    SolverOptions solver;
    std::size_t threads = 1;
    std::uint64_t enumeration_bound = kEnumerationBound;
};

enum class OutcomeKind { Witness, Partition, Optimum, Unsatisfiable };

[[nodiscard]] std::string to_string(OutcomeKind kind);

struct SynthesisStats {
    /// Realisations put forward as concrete candidates.
    std::uint64_t candidates = 0;
    /// Model-checker calls: realised chains plus quotient MDP analyses.
    std::uint64_t checks = 0;
    std::uint64_t iterations = 0;
    /// Realisations classified without a check of their own.
    std::uint64_t pruned = 0;
    double wall_ms = 0.0;

    SynthesisStats& operator+=(const SynthesisStats& other);
};

/// One engine step. Fields not meaningful for an event stay empty.
struct TraceRecord {
    std::string event;                 // "check", "quotient", "conflict", ...
    std::uint64_t family_size = 0;
    std::optional<double> lower;
    std::optional<double> upper;
    std::string verdict;
    std::optional<Realisation> candidate;
    std::vector<HoleId> holes;         // split hole or conflict holes
    std::vector<StateIndex> critical;
    std::uint64_t scope = 0;           // realisations covered by a learned clause
};

struct SynthesisOutcome {
    OutcomeKind kind = OutcomeKind::Unsatisfiable;
    std::optional<Realisation> witness;
    std::optional<double> value;
    std::optional<std::uint64_t> cost;
    /// Partition sets, sorted lexicographically.
    std::vector<Realisation> satisfying;
    std::vector<Realisation> violating;
    SynthesisStats stats;
    std::vector<TraceRecord> trace;
};

enum class EngineKind { Enumeration, Cegar, Cegis };

[[nodiscard]] std::string to_string(EngineKind kind);

/// Throws ModelError on an ill-formed query for `fam`.
void validate_query(const Family& fam, const SynthesisQuery& query);

[[nodiscard]] CostModel effective_cost_model(const Family& fam, const SynthesisQuery& query);
[[nodiscard]] Subfamily effective_scope(const Family& fam, const SynthesisQuery& query);
[[nodiscard]] bool within_budget(const Family& fam, const SynthesisQuery& query, const Realisation& r);

/// Reachability probability of the goal from the initial state of D_r.
[[nodiscard]] double realisation_value(const Family& fam, const Realisation& r, const StateSet& goal,
                                       const SolverOptions& options = {});

/// Runs `engine`, adding the cost-optimal layer when requested.
[[nodiscard]] SynthesisOutcome solve(EngineKind engine, const Family& fam, const SynthesisQuery& query);

} // namespace chainsynth
