#include "chainsynth/engines/enumeration.hpp"

#include <algorithm>
#include <thread>

namespace chainsynth {

namespace {

std::vector<Realisation> members_of(const Family& fam, const SynthesisQuery& query) {
    RealisationEnumerator walk(fam, effective_scope(fam, query));
    std::vector<Realisation> out;
    while (auto r = walk.next()) {
        if (out.size() >= query.enumeration_bound) {
            throw ModelError("family exceeds the enumeration bound of " + std::to_string(query.enumeration_bound) +
                             " realisations");
        }
        out.push_back(std::move(*r));
    }
    return out;
}

/// Values of members[i] for the indices in `todo`, computed on up to
/// `threads` workers; each slot is written by exactly one worker.
void evaluate(const Family& fam, const SynthesisQuery& query, const std::vector<Realisation>& members,
              const std::vector<std::size_t>& todo, std::vector<double>& values) {
    auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t k = begin; k < todo.size(); k += step) {
            values[todo[k]] = realisation_value(fam, members[todo[k]], query.spec.goal, query.solver);
        }
    };
    std::size_t threads = std::min(query.threads, std::max<std::size_t>(todo.size(), 1));
    if (threads <= 1) {
        work(0, 1);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back(work, t, threads);
    }
    for (auto& th : pool) {
        th.join();
    }
}

} // namespace

SynthesisOutcome enum_solve(const Family& fam, const SynthesisQuery& query) {
    validate_query(fam, query);
    SynthesisOutcome out;
    std::vector<Realisation> members = members_of(fam, query);
    std::vector<double> values(members.size(), 0.0);
    std::vector<bool> admissible(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        admissible[i] = within_budget(fam, query, members[i]);
    }
    const auto& spec = query.spec;

    if (query.kind == QueryKind::Feasibility) {
        // Batches keep the lexicographically first witness while still
        // letting several workers share the checking.
        std::size_t batch = query.threads <= 1 ? 1 : query.threads * 16;
        for (std::size_t begin = 0; begin < members.size(); begin += batch) {
            std::vector<std::size_t> todo;
            for (std::size_t i = begin; i < std::min(members.size(), begin + batch); ++i) {
                if (admissible[i]) {
                    todo.push_back(i);
                }
            }
            evaluate(fam, query, members, todo, values);
            out.stats.checks += todo.size();
            out.stats.candidates += todo.size();
            out.stats.iterations += todo.size();
            for (std::size_t i : todo) {
                if (compare(values[i], spec.op, spec.threshold, spec.tolerance)) {
                    out.kind = OutcomeKind::Witness;
                    out.witness = members[i];
                    out.value = values[i];
                    return out;
                }
            }
        }
        out.kind = OutcomeKind::Unsatisfiable;
        return out;
    }

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (admissible[i]) {
            todo.push_back(i);
        }
    }
    evaluate(fam, query, members, todo, values);
    out.stats.checks = todo.size();
    out.stats.candidates = todo.size();
    out.stats.iterations = todo.size();

    if (query.kind == QueryKind::Partition) {
        out.kind = OutcomeKind::Partition;
        for (std::size_t i = 0; i < members.size(); ++i) {
            bool sat = admissible[i] && compare(values[i], spec.op, spec.threshold, spec.tolerance);
            (sat ? out.satisfying : out.violating).push_back(members[i]);
        }
        return out;
    }

    bool maximise = query.kind != QueryKind::Min;
    std::optional<std::size_t> best;
    for (std::size_t i : todo) {
        if (!best || (maximise ? values[i] > values[*best] + kValueTieTolerance
                               : values[i] < values[*best] - kValueTieTolerance)) {
            best = i;
        }
    }
    if (!best) {
        out.kind = OutcomeKind::Unsatisfiable;
        return out;
    }
    if (query.kind == QueryKind::EpsOptimal) {
        double bar = (1.0 - query.epsilon) * values[*best] - kValueTieTolerance;
        for (std::size_t i : todo) {
            if (values[i] >= bar) {
                best = i;
                break;
            }
        }
    }
    out.kind = OutcomeKind::Optimum;
    out.witness = members[*best];
    out.value = values[*best];
    return out;
}

std::optional<std::pair<Realisation, std::uint64_t>> cost_optimal(const Family& fam, const Specification& spec,
                                                                  const SynthesisQuery& base) {
    SynthesisQuery query = base;
    query.kind = QueryKind::Feasibility;
    query.spec = spec;
    query.cost_optimal = true;
    SynthesisOutcome out = solve(EngineKind::Enumeration, fam, query);
    if (!out.witness) {
        return std::nullopt;
    }
    return std::make_pair(*out.witness, *out.cost);
}

} // namespace chainsynth
