#include "bench.hpp"

#include "chainsynth/engines/cegar.hpp"
#include "chainsynth/family_json.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace chainsynth::cli {

namespace {

constexpr double kValueAgreement = 1e-6;

bool cegar_compatible(const Family& fam) {
    try {
        (void)fold_constraints(fam, fam.full_subfamily());
        return true;
    } catch (const ModelError&) {
        return false;
    }
}

std::string describe(const Family& fam, const std::optional<Realisation>& r) {
    return r ? to_string(fam, *r) : "-";
}

} // namespace

std::string compare_outcomes(const Family& fam, const SynthesisQuery& query, const SynthesisOutcome& oracle,
                             const SynthesisOutcome& other) {
    std::ostringstream msg;
    if (oracle.kind != other.kind) {
        msg << "outcome kind " << to_string(other.kind) << " vs oracle " << to_string(oracle.kind);
        return msg.str();
    }
    switch (query.kind) {
    case QueryKind::Partition:
        if (oracle.satisfying != other.satisfying || oracle.violating != other.violating) {
            msg << "partition differs: |T| " << other.satisfying.size() << " vs " << oracle.satisfying.size()
                << ", |F| " << other.violating.size() << " vs " << oracle.violating.size();
        }
        break;
    case QueryKind::Feasibility:
        if (other.witness) {
            double v = realisation_value(fam, *other.witness, query.spec.goal, query.solver);
            const auto& s = query.spec;
            if (!compare(v, s.op, s.threshold, s.tolerance) || !within_budget(fam, query, *other.witness)) {
                msg << "witness " << describe(fam, other.witness) << " does not satisfy the query";
            }
        }
        break;
    default:
        if (oracle.value && other.value && std::abs(*oracle.value - *other.value) > kValueAgreement) {
            msg << "value " << *other.value << " vs oracle " << *oracle.value;
        } else if (other.witness) {
            double v = realisation_value(fam, *other.witness, query.spec.goal, query.solver);
            if (std::abs(v - *other.value) > kValueAgreement) {
                msg << "witness " << describe(fam, other.witness) << " has value " << v << ", reported "
                    << *other.value;
            }
        }
        break;
    }
    return msg.str();
}

namespace {

struct Disagreement {
    EngineKind engine;
    std::string message;
};

std::optional<Disagreement> find_disagreement(const Family& fam, const SynthesisQuery& query,
                                              const std::vector<EngineKind>& engines, BenchReport* report) {
    SynthesisOutcome oracle = solve(EngineKind::Enumeration, fam, query);
    for (EngineKind e : engines) {
        SynthesisOutcome out = e == EngineKind::Enumeration ? oracle : solve(e, fam, query);
        if (report != nullptr) {
            auto& totals = report->engines[to_string(e)];
            ++totals.runs;
            totals.candidates += out.stats.candidates;
            totals.checks += out.stats.checks;
            totals.wall_ms += out.stats.wall_ms;
        }
        std::string msg = compare_outcomes(fam, query, oracle, out);
        if (!msg.empty()) {
            return Disagreement{e, msg};
        }
    }
    return std::nullopt;
}

/// Pins holes one option at a time while the disagreement persists.
std::string minimise(const Family& fam, SynthesisQuery query, const std::vector<EngineKind>& engines) {
    Subfamily scope = fam.full_subfamily();
    for (HoleId h = 0; h < fam.num_holes(); ++h) {
        for (OptionIndex o : std::vector<OptionIndex>(scope.options(h))) {
            SynthesisQuery attempt = query;
            attempt.scope = scope.restricted(h, {o});
            try {
                if (find_disagreement(fam, attempt, engines, nullptr)) {
                    scope = *attempt.scope;
                    break;
                }
            } catch (const ModelError&) {
                // An empty constrained scope cannot reproduce anything.
            }
        }
    }
    std::ostringstream out;
    out << "query: " << to_string(query.kind) << " P" << to_string(query.spec.op) << query.spec.threshold
        << " [F s in {";
    bool first = true;
    for (StateIndex s : query.spec.goal.members()) {
        out << (first ? "" : ",") << s;
        first = false;
    }
    out << "}]\nrestrict:";
    for (HoleId h = 0; h < fam.num_holes(); ++h) {
        if (scope.options(h).size() < fam.hole(h).options.size()) {
            out << " --restrict " << fam.hole(h).name << "=";
            for (std::size_t i = 0; i < scope.options(h).size(); ++i) {
                out << (i > 0 ? "|" : "") << fam.hole(h).options[scope.options(h)[i]];
            }
        }
    }
    out << "\nfamily:\n" << family_to_json(fam) << "\n";
    return out.str();
}

void run_instance(std::size_t index, const RandomInstance& inst, const BenchConfig& config, BenchReport& report) {
    const Family& fam = inst.family;
    std::vector<EngineKind> engines;
    for (EngineKind e : config.engines) {
        if (e != EngineKind::Cegar || cegar_compatible(fam)) {
            engines.push_back(e);
        }
    }
    ++report.instances;
    report.realisations += count_realisations(fam, fam.full_subfamily());
    for (QueryKind kind : config.queries) {
        SynthesisQuery query;
        query.kind = kind;
        query.spec = inst.spec;
        query.threads = config.threads;
        try {
            if (auto d = find_disagreement(fam, query, engines, &report)) {
                report.failures.push_back({index, to_string(kind), to_string(d->engine) + ": " + d->message,
                                           minimise(fam, query, engines)});
            }
        } catch (const ModelError& e) {
            report.failures.push_back({index, to_string(kind), std::string("error: ") + e.what(), ""});
        }
    }
}

} // namespace

BenchReport run_bench(const BenchConfig& config) {
    auto start = std::chrono::steady_clock::now();
    BenchReport report;
    if (config.pruning) {
        run_instance(0, pruning_instance(config.pruning->first, config.pruning->second), config, report);
    } else {
        for (std::size_t i = 0; i < config.instances; ++i) {
            run_instance(i, random_instance(config.seed + i, config.params), config, report);
        }
    }
    report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return report;
}

} // namespace chainsynth::cli
