#include "chainsynth/engines/cegar.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace chainsynth {

std::pair<Subfamily, Subfamily> split(const Subfamily& sub, const ConsistencyVerdict& verdict) {
    const auto* inconsistent = std::get_if<Inconsistent>(&verdict);
    if (inconsistent == nullptr || inconsistent->holes.empty()) {
        throw ModelError("split needs an inconsistent scheduler verdict");
    }
    const HoleUsage* pick = nullptr;
    for (const auto& usage : inconsistent->holes) {
        if (pick == nullptr || usage.frequency.size() > pick->frequency.size() ||
            (usage.frequency.size() == pick->frequency.size() && usage.hole < pick->hole)) {
            pick = &usage;
        }
    }
    std::vector<std::pair<OptionIndex, std::size_t>> chosen(pick->frequency.begin(), pick->frequency.end());
    std::stable_sort(chosen.begin(), chosen.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::size_t keep = std::max<std::size_t>(1, chosen.size() / 2);
    std::vector<OptionIndex> first;
    for (std::size_t i = 0; i < keep; ++i) {
        first.push_back(chosen[i].first);
    }
    std::vector<OptionIndex> second;
    for (OptionIndex o : sub.options(pick->hole)) {
        if (std::find(first.begin(), first.end(), o) == first.end()) {
            second.push_back(o);
        }
    }
    if (second.empty()) {
        throw ModelError("split would leave an empty part");
    }
    return {sub.restricted(pick->hole, std::move(first)), sub.restricted(pick->hole, std::move(second))};
}

std::vector<Subfamily> split_off(const Subfamily& sub, const Realisation& r) {
    std::vector<Subfamily> parts;
    Subfamily prefix = sub;
    for (HoleId h = 0; h < sub.num_holes(); ++h) {
        std::vector<OptionIndex> rest;
        for (OptionIndex o : sub.options(h)) {
            if (o != r.options[h]) {
                rest.push_back(o);
            }
        }
        if (!rest.empty()) {
            parts.push_back(prefix.restricted(h, std::move(rest)));
        }
        prefix = prefix.restricted(h, {r.options[h]});
    }
    return parts;
}

namespace {

void conjuncts(const Formula& f, std::vector<const Formula*>& out) {
    if (f.kind == Formula::Kind::And) {
        for (const auto& g : f.args) {
            conjuncts(g, out);
        }
    } else {
        out.push_back(&f);
    }
}

} // namespace

std::optional<Subfamily> fold_constraints(const Family& fam, const Subfamily& sub) {
    std::vector<const Formula*> parts;
    for (const auto& c : fam.constraints()) {
        conjuncts(c, parts);
    }
    Subfamily out = sub;
    for (const Formula* f : parts) {
        std::vector<HoleId> holes = f->holes();
        PartialAssignment a(fam.num_holes());
        if (holes.empty()) {
            if (f->evaluate(a) != std::optional<bool>(true)) {
                return std::nullopt;
            }
            continue;
        }
        if (holes.size() > 1) {
            throw ModelError("constraints relate several holes and cannot be folded into subfamilies; "
                             "use the cegis engine");
        }
        HoleId h = holes.front();
        std::vector<OptionIndex> keep;
        for (OptionIndex o : out.options(h)) {
            a[h] = o;
            if (f->evaluate(a) == std::optional<bool>(true)) {
                keep.push_back(o);
            }
        }
        if (keep.empty()) {
            return std::nullopt;
        }
        out = out.restricted(h, std::move(keep));
    }
    return out;
}

QuotientBounds quotient_bounds(const Family& fam, const Subfamily& sub, const StateSet& goal,
                               const SolverOptions& options) {
    QuotientMdp q = quotient_mdp(fam, sub);
    StateSet lifted = goal.resized(q.mdp.num_states());
    ExtremalResult lo = mdp_extremal(q.mdp, lifted, OptimizationDirection::Minimize, options);
    ExtremalResult hi = mdp_extremal(q.mdp, lifted, OptimizationDirection::Maximize, options);
    return {std::move(lo), std::move(hi), std::move(q)};
}

namespace {

/// States whose scheduled choice can influence the value: reachable from the
/// initial state without passing a goal state, and not already decided for
/// every scheduler (value 0 when maximising, 1 when minimising).
StateSet relevant_states(const QuotientMdp& q, const ExtremalResult& ext, const StateSet& goal, bool maximise) {
    StateSet seen(q.mdp.num_states());
    std::vector<StateIndex> stack{q.fresh_initial};
    seen.insert(q.fresh_initial);
    StateSet relevant(q.mdp.num_states());
    while (!stack.empty()) {
        StateIndex s = stack.back();
        stack.pop_back();
        double v = ext.values[s];
        if (goal.contains(s) || (maximise ? v == 0.0 : v == 1.0)) {
            continue;
        }
        relevant.insert(s);
        const auto& action = q.mdp.actions(s)[ext.scheduler.choice[s]];
        for (const auto& t : action.distribution) {
            if (!seen.contains(t.target)) {
                seen.insert(t.target);
                stack.push_back(t.target);
            }
        }
    }
    return relevant;
}

std::uint64_t min_option_cost(const Family& fam, const Subfamily& sub) {
    std::uint64_t total = 0;
    for (HoleId h = 0; h < fam.num_holes(); ++h) {
        std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
        for (OptionIndex o : sub.options(h)) {
            best = std::min(best, fam.hole(h).costs[o]);
        }
        total += best;
    }
    return total;
}

class Cegar {
public:
    Cegar(const Family& fam, const SynthesisQuery& query)
        : _fam(fam), _query(query), _model(effective_cost_model(fam, query)),
          _goal(query.spec.goal.resized(fam.num_states() + 1)) {}

    SynthesisOutcome run() {
        std::optional<Subfamily> scope = fold_constraints(_fam, effective_scope(_fam, _query));
        bool optimise = _query.kind == QueryKind::Max || _query.kind == QueryKind::Min ||
                        _query.kind == QueryKind::EpsOptimal;
        if (scope) {
            _work.push_back(*scope);
        }
        if (optimise) {
            optimise_loop();
            if (_incumbent) {
                _out.kind = OutcomeKind::Optimum;
                _out.witness = _incumbent->first;
                _out.value = _incumbent->second;
            } else {
                _out.kind = OutcomeKind::Unsatisfiable;
            }
        } else {
            threshold_loop();
            if (_query.kind == QueryKind::Partition) {
                _out.kind = OutcomeKind::Partition;
            } else if (!_out.witness) {
                _out.kind = OutcomeKind::Unsatisfiable;
            }
        }
        return std::move(_out);
    }

private:
    bool over_option_budget(const Subfamily& sub) const {
        return _query.budget && _model == CostModel::OptionSum && min_option_cost(_fam, sub) > *_query.budget;
    }

    void record(TraceRecord rec) { _out.trace.push_back(std::move(rec)); }

    bool holds(double value) const {
        const auto& spec = _query.spec;
        return compare(value, spec.op, spec.threshold, spec.tolerance);
    }

    /// Checks one member directly; returns true when it is a witness.
    bool classify_single(const Realisation& r) {
        ++_out.stats.candidates;
        TraceRecord rec{"check", 1};
        rec.candidate = r;
        bool sat = false;
        double v = 0.0;
        if (!within_budget(_fam, _query, r)) {
            rec.verdict = "over-budget";
        } else {
            v = realisation_value(_fam, r, _query.spec.goal, _query.solver);
            ++_out.stats.checks;
            sat = holds(v);
            rec.lower = rec.upper = v;
            rec.verdict = sat ? "sat" : "unsat";
        }
        (sat ? _out.satisfying : _out.violating).push_back(r);
        record(std::move(rec));
        if (sat && _query.kind == QueryKind::Feasibility) {
            _out.kind = OutcomeKind::Witness;
            _out.witness = r;
            _out.value = v;
            return true;
        }
        return false;
    }

    /// Classifies a whole subfamily without individual checks.
    bool classify_all(const Subfamily& sub, bool sat) {
        for (auto& r : enumerate_realisations(_fam, sub)) {
            bool member = sat && within_budget(_fam, _query, r);
            ++_out.stats.pruned;
            if (member && _query.kind == QueryKind::Feasibility) {
                _out.kind = OutcomeKind::Witness;
                _out.witness = r;
                return true;
            }
            (member ? _out.satisfying : _out.violating).push_back(std::move(r));
        }
        return false;
    }

    void threshold_loop() {
        bool upper = is_upper_bound(_query.spec.op);
        while (!_work.empty()) {
            Subfamily sub = std::move(_work.front());
            _work.pop_front();
            ++_out.stats.iterations;
            if (over_option_budget(sub)) {
                record({"budget", sub.product_size(), {}, {}, "over-budget"});
                if (classify_all(sub, false)) {
                    return;
                }
                continue;
            }
            if (sub.is_singleton()) {
                if (classify_single(sub.singleton())) {
                    return;
                }
                continue;
            }
            QuotientBounds b = quotient_bounds(_fam, sub, _query.spec.goal, _query.solver);
            ++_out.stats.checks;
            TraceRecord rec{"quotient", sub.product_size(), b.min.value, b.max.value};
            bool all_sat = holds(upper ? b.max.value : b.min.value);
            bool all_viol = !holds(upper ? b.min.value : b.max.value);
            if (all_sat || all_viol) {
                rec.verdict = all_sat ? "all-sat" : "all-unsat";
                record(std::move(rec));
                if (classify_all(sub, all_sat)) {
                    return;
                }
                continue;
            }
            // The scheduler on the side that blocks a verdict is the one to
            // realise or refine.
            const ExtremalResult& blocking = upper ? b.max : b.min;
            ConsistencyVerdict verdict =
                scheduler_consistency(b.quotient, blocking.scheduler, relevant_states(b.quotient, blocking, _goal, upper));
            if (const auto* c = std::get_if<Consistent>(&verdict)) {
                rec.verdict = "consistent";
                rec.candidate = c->realisation;
                record(std::move(rec));
                for (auto& part : split_off(sub, c->realisation)) {
                    _work.push_back(std::move(part));
                }
                if (classify_single(c->realisation)) {
                    return;
                }
                continue;
            }
            auto [first, second] = split(sub, verdict);
            rec.verdict = "split";
            for (HoleId h = 0; h < sub.num_holes(); ++h) {
                if (first.options(h) != sub.options(h)) {
                    rec.holes.push_back(h);
                }
            }
            record(std::move(rec));
            _work.push_back(std::move(first));
            _work.push_back(std::move(second));
        }
    }

    bool improves(double value, const Realisation& r) const {
        if (!_incumbent) {
            return true;
        }
        double best = _incumbent->second;
        bool maximise = _query.kind != QueryKind::Min;
        if (maximise ? value > best + kValueTieTolerance : value < best - kValueTieTolerance) {
            return true;
        }
        return std::abs(value - best) <= kValueTieTolerance && r < _incumbent->first;
    }

    /// Could some member with value at most (max) / at least (min) `bound`
    /// still replace the incumbent?
    bool promising(double bound) const {
        if (!_incumbent) {
            return true;
        }
        double best = _incumbent->second;
        switch (_query.kind) {
        case QueryKind::Min:
            return bound < best - kValueTieTolerance;
        case QueryKind::EpsOptimal:
            return (1.0 - _query.epsilon) * bound > best + kValueTieTolerance;
        default:
            return bound > best + kValueTieTolerance;
        }
    }

    void consider(const Realisation& r) {
        ++_out.stats.candidates;
        TraceRecord rec{"check", 1};
        rec.candidate = r;
        if (!within_budget(_fam, _query, r)) {
            rec.verdict = "over-budget";
            record(std::move(rec));
            return;
        }
        double v = realisation_value(_fam, r, _query.spec.goal, _query.solver);
        ++_out.stats.checks;
        rec.lower = rec.upper = v;
        rec.verdict = improves(v, r) ? "incumbent" : "dominated";
        if (improves(v, r)) {
            _incumbent = {r, v};
        }
        record(std::move(rec));
    }

    void optimise_loop() {
        bool maximise = _query.kind != QueryKind::Min;
        auto dir = maximise ? OptimizationDirection::Maximize : OptimizationDirection::Minimize;
        while (!_work.empty()) {
            Subfamily sub = std::move(_work.front());
            _work.pop_front();
            ++_out.stats.iterations;
            std::uint64_t size = sub.product_size();
            if (over_option_budget(sub)) {
                _out.stats.pruned += size;
                record({"budget", size, {}, {}, "over-budget"});
                continue;
            }
            if (sub.is_singleton()) {
                consider(sub.singleton());
                continue;
            }
            QuotientMdp q = quotient_mdp(_fam, sub);
            ExtremalResult ext = mdp_extremal(q.mdp, _goal, dir, _query.solver);
            ++_out.stats.checks;
            TraceRecord rec{"quotient", size};
            (maximise ? rec.upper : rec.lower) = ext.value;
            if (!promising(ext.value)) {
                rec.verdict = "pruned";
                _out.stats.pruned += size;
                record(std::move(rec));
                continue;
            }
            ConsistencyVerdict verdict = scheduler_consistency(q, ext.scheduler, relevant_states(q, ext, _goal, maximise));
            if (const auto* c = std::get_if<Consistent>(&verdict)) {
                rec.verdict = "consistent";
                rec.candidate = c->realisation;
                record(std::move(rec));
                bool affordable = within_budget(_fam, _query, c->realisation);
                consider(c->realisation);
                if (affordable) {
                    // Its value is the subfamily's bound, so no other member
                    // can do better.
                    _out.stats.pruned += size - 1;
                } else {
                    for (auto& part : split_off(sub, c->realisation)) {
                        _work.push_back(std::move(part));
                    }
                }
                continue;
            }
            auto [first, second] = split(sub, verdict);
            rec.verdict = "split";
            for (HoleId h = 0; h < sub.num_holes(); ++h) {
                if (first.options(h) != sub.options(h)) {
                    rec.holes.push_back(h);
                }
            }
            record(std::move(rec));
            _work.push_back(std::move(first));
            _work.push_back(std::move(second));
        }
    }

    const Family& _fam;
    const SynthesisQuery& _query;
    CostModel _model;
    StateSet _goal;
    std::deque<Subfamily> _work;
    std::optional<std::pair<Realisation, double>> _incumbent;
    SynthesisOutcome _out;
};

} // namespace

SynthesisOutcome cegar_solve(const Family& fam, const SynthesisQuery& query) {
    validate_query(fam, query);
    return Cegar(fam, query).run();
}

} // namespace chainsynth
