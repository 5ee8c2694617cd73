#include "chainsynth/engines/synthesis.hpp"

#include "chainsynth/engines/cegar.hpp"
#include "chainsynth/engines/cegis.hpp"
#include "chainsynth/engines/enumeration.hpp"

#include <algorithm>
#include <chrono>

namespace chainsynth {

std::string to_string(QueryKind kind) {
    switch (kind) {
    case QueryKind::Feasibility:
        return "feasible";
    case QueryKind::Partition:
        return "partition";
    case QueryKind::Max:
        return "max";
    case QueryKind::Min:
        return "min";
    case QueryKind::EpsOptimal:
        return "eps";
    }
    return "?";
}

std::string to_string(OutcomeKind kind) {
    switch (kind) {
    case OutcomeKind::Witness:
        return "witness";
    case OutcomeKind::Partition:
        return "partition";
    case OutcomeKind::Optimum:
        return "optimum";
    case OutcomeKind::Unsatisfiable:
        return "unsatisfiable";
    }
    return "?";
}

std::string to_string(EngineKind kind) {
    switch (kind) {
    case EngineKind::Enumeration:
        return "enum";
    case EngineKind::Cegar:
        return "cegar";
    case EngineKind::Cegis:
        return "cegis";
    }
    return "?";
}

SynthesisStats& SynthesisStats::operator+=(const SynthesisStats& other) {
    candidates += other.candidates;
    checks += other.checks;
    iterations += other.iterations;
    pruned += other.pruned;
    wall_ms += other.wall_ms;
    return *this;
}

void validate_query(const Family& fam, const SynthesisQuery& query) {
    query.spec.validate(fam.num_states());
    if (query.kind == QueryKind::EpsOptimal && !(query.epsilon > 0.0 && query.epsilon <= 1.0)) {
        throw ModelError("epsilon must lie in (0, 1]");
    }
    if (query.scope) {
        const auto& scope = *query.scope;
        if (scope.num_holes() != fam.num_holes()) {
            throw ModelError("scope does not match the family's holes");
        }
        for (HoleId h = 0; h < fam.num_holes(); ++h) {
            if (scope.options(h).empty()) {
                throw ModelError("scope leaves hole '" + fam.hole(h).name + "' without options");
            }
            for (OptionIndex o : scope.options(h)) {
                if (o >= fam.hole(h).options.size()) {
                    throw ModelError("scope names a missing option of hole '" + fam.hole(h).name + "'");
                }
            }
        }
    }
    if (query.threads == 0) {
        throw ModelError("thread count must be positive");
    }
}

CostModel effective_cost_model(const Family& fam, const SynthesisQuery& query) {
    return query.cost_model.value_or(fam.cost_model());
}

Subfamily effective_scope(const Family& fam, const SynthesisQuery& query) {
    return query.scope ? *query.scope : fam.full_subfamily();
}

bool within_budget(const Family& fam, const SynthesisQuery& query, const Realisation& r) {
    return !query.budget || cost(fam, r, effective_cost_model(fam, query)) <= *query.budget;
}

double realisation_value(const Family& fam, const Realisation& r, const StateSet& goal, const SolverOptions& options) {
    MarkovChain chain = realise(fam, r);
    return reach_probability(chain, goal, options)[chain.initial()];
}

namespace {

SynthesisOutcome dispatch(EngineKind engine, const Family& fam, const SynthesisQuery& query) {
    switch (engine) {
    case EngineKind::Enumeration:
        return enum_solve(fam, query);
    case EngineKind::Cegar:
        return cegar_solve(fam, query);
    case EngineKind::Cegis:
        return cegis_solve(fam, query);
    }
    throw ModelError("unknown engine");
}

/// Cheapest member of `members`; they arrive sorted, so the first minimum is
/// also the lexicographic tie-break.
std::optional<Realisation> cheapest(const Family& fam, CostModel model, const std::vector<Realisation>& members) {
    std::optional<Realisation> best;
    std::uint64_t best_cost = 0;
    for (const auto& r : members) {
        std::uint64_t c = cost(fam, r, model);
        if (!best || c < best_cost) {
            best = r;
            best_cost = c;
        }
    }
    return best;
}

SynthesisOutcome solve_cost_optimal(EngineKind engine, const Family& fam, const SynthesisQuery& query) {
    SynthesisQuery inner = query;
    inner.cost_optimal = false;
    SynthesisStats stats;
    std::vector<TraceRecord> trace;

    if (query.kind == QueryKind::Max || query.kind == QueryKind::Min || query.kind == QueryKind::EpsOptimal) {
        SynthesisOutcome best = dispatch(engine, fam, inner);
        if (best.kind == OutcomeKind::Unsatisfiable) {
            return best;
        }
        stats += best.stats;
        trace = std::move(best.trace);
        double v = *best.value;
        // For eps the admissible set is everything within the eps factor of
        // the optimum, so the optimum must be computed exactly first.
        if (query.kind == QueryKind::EpsOptimal) {
            SynthesisQuery exact = inner;
            exact.kind = QueryKind::Max;
            SynthesisOutcome opt = dispatch(engine, fam, exact);
            stats += opt.stats;
            v = (1.0 - query.epsilon) * *opt.value;
        }
        inner.kind = QueryKind::Partition;
        inner.spec.op = query.kind == QueryKind::Min ? ComparisonOp::LessEqual : ComparisonOp::GreaterEqual;
        inner.spec.threshold = std::clamp(query.kind == QueryKind::Min ? v + kValueTieTolerance : v - kValueTieTolerance,
                                          0.0, 1.0);
        inner.spec.tolerance = 0.0;
    } else {
        inner.kind = QueryKind::Partition;
    }

    SynthesisOutcome part = dispatch(engine, fam, inner);
    stats += part.stats;
    trace.insert(trace.end(), part.trace.begin(), part.trace.end());
    SynthesisOutcome out;
    out.stats = stats;
    out.trace = std::move(trace);
    std::optional<Realisation> best = cheapest(fam, effective_cost_model(fam, query), part.satisfying);
    if (query.kind == QueryKind::Partition) {
        out.kind = OutcomeKind::Partition;
        out.satisfying = std::move(part.satisfying);
        out.violating = std::move(part.violating);
        out.witness = best;
        return out;
    }
    if (!best) {
        out.kind = OutcomeKind::Unsatisfiable;
        return out;
    }
    out.kind = query.kind == QueryKind::Feasibility ? OutcomeKind::Witness : OutcomeKind::Optimum;
    out.witness = best;
    if (query.kind != QueryKind::Feasibility) {
        out.value = realisation_value(fam, *best, query.spec.goal, query.solver);
        ++out.stats.checks;
    }
    return out;
}

} // namespace

SynthesisOutcome solve(EngineKind engine, const Family& fam, const SynthesisQuery& query) {
    validate_query(fam, query);
    auto start = std::chrono::steady_clock::now();
    SynthesisOutcome out = query.cost_optimal ? solve_cost_optimal(engine, fam, query) : dispatch(engine, fam, query);
    std::sort(out.satisfying.begin(), out.satisfying.end());
    std::sort(out.violating.begin(), out.violating.end());
    if (out.witness) {
        out.cost = cost(fam, *out.witness, effective_cost_model(fam, query));
    }
    out.stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

} // namespace chainsynth
