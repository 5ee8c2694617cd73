#include "chainsynth/engines/cegis.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace chainsynth {

namespace {

bool decides(double value, const Specification& spec, ExtractionMode mode) {
    bool holds = compare(value, spec.op, spec.threshold, spec.tolerance);
    return mode == ExtractionMode::Refute ? !holds : holds;
}

} // namespace

StateSet extract_counterexample(const MarkovChain& chain, const Specification& spec, ExtractionMode mode,
                                const SolverOptions& options) {
    spec.validate(chain.num_states());
    bool upper = is_upper_bound(spec.op);
    if ((mode == ExtractionMode::Refute) != upper) {
        throw ModelError(mode == ExtractionMode::Refute ? "refuting sub-chains exist only for upper-bound specs"
                                                        : "establishing sub-chains exist only for lower-bound specs");
    }
    std::vector<double> to_goal = reach_probability(chain, spec.goal, options);
    StateIndex s0 = chain.initial();
    if (!decides(to_goal[s0], spec, mode)) {
        throw ModelError(mode == ExtractionMode::Refute ? "the chain satisfies the specification"
                                                        : "the chain violates the specification");
    }

    StateSet critical(chain.num_states());
    critical.insert(s0);
    auto decided_by = [&](const StateSet& c) {
        return decides(reach_probability(sub_mc(chain, c), spec.goal, options)[s0], spec, mode);
    };
    if (decided_by(critical)) {
        return critical;
    }

    // Rank the transient states that can still reach the goal by expected
    // visits from s0 times their probability to finish. One sparse solve of
    // (I - P_TT^T) v = e_s0; every state in T leaves T with positive
    // probability, so the system is regular.
    StateSet reachable = reachable_states(chain, s0);
    std::vector<StateIndex> transient;
    std::vector<Eigen::Index> local(chain.num_states(), -1);
    for (StateIndex s : reachable.members()) {
        if (!spec.goal.contains(s) && to_goal[s] > 0.0) {
            local[s] = static_cast<Eigen::Index>(transient.size());
            transient.push_back(s);
        }
    }
    if (local[s0] < 0) {
        return reachable;
    }
    auto m = static_cast<Eigen::Index>(transient.size());
    std::vector<Eigen::Triplet<double>> triplets;
    for (Eigen::Index i = 0; i < m; ++i) {
        triplets.emplace_back(i, i, 1.0);
        for (const auto& e : chain.row(transient[static_cast<std::size_t>(i)])) {
            if (local[e.target] >= 0) {
                triplets.emplace_back(local[e.target], i, -e.probability);
            }
        }
    }
    Eigen::SparseMatrix<double> a(m, m);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
        throw ModelError("expected-visit system is singular");
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs[local[s0]] = 1.0;
    Eigen::VectorXd visits = lu.solve(rhs);

    std::vector<std::pair<double, StateIndex>> ranked;
    for (StateIndex s : transient) {
        if (s != s0) {
            ranked.emplace_back(visits[local[s]] * to_goal[s], s);
        }
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    // Shortest deciding prefix of the ranking. Sub-chain values grow with C,
    // so the predicate is monotone in the prefix length.
    auto prefix = [&](std::size_t len) {
        StateSet c(chain.num_states());
        c.insert(s0);
        for (std::size_t i = 0; i < len; ++i) {
            c.insert(ranked[i].second);
        }
        return c;
    };
    std::size_t lo = 1;
    std::size_t hi = ranked.size();
    if (!decided_by(prefix(hi))) {
        return reachable;
    }
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (decided_by(prefix(mid))) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return prefix(lo);
}

std::vector<HoleId> conflict_holes(const Family& fam, const StateSet& critical) {
    std::set<HoleId> holes;
    for (StateIndex s : critical.members()) {
        if (s < fam.num_states()) {
            for (HoleId h : fam.holes_of_state(s)) {
                holes.insert(h);
            }
        }
    }
    return {holes.begin(), holes.end()};
}

bool LearnedClause::matches(const Realisation& r) const {
    return std::all_of(literals.begin(), literals.end(), [&](const Literal& l) {
        return std::binary_search(l.options.begin(), l.options.end(), r.options[l.hole]);
    });
}

LearnedClause generalise(const Family& fam, const Realisation& candidate, const StateSet& critical,
                         ClauseVerdict verdict) {
    LearnedClause clause;
    clause.verdict = verdict;
    std::vector<HoleId> holes = conflict_holes(fam, critical);
    for (HoleId h : holes) {
        std::size_t k = fam.hole(h).options.size();
        std::vector<bool> same(k, true);
        for (StateIndex s : critical.members()) {
            if (s >= fam.num_states()) {
                continue;
            }
            for (const auto& branch : fam.row(s)) {
                const auto* t = std::get_if<HoleTarget>(&branch.target);
                if (t == nullptr) {
                    continue;
                }
                auto pos = std::find(t->holes.begin(), t->holes.end(), h);
                if (pos == t->holes.end()) {
                    continue;
                }
                // Stride of h in the table's mixed radix.
                std::size_t stride = 1;
                for (auto it = pos + 1; it != t->holes.end(); ++it) {
                    stride *= fam.hole(*it).options.size();
                }
                OptionIndex mine = candidate.options[h];
                for (std::size_t i = 0; i < t->table.size(); ++i) {
                    std::size_t digit = (i / stride) % k;
                    if (digit != mine) {
                        continue;
                    }
                    for (OptionIndex o = 0; o < k; ++o) {
                        std::size_t j = i - mine * stride + o * stride;
                        if (t->table[j] != t->table[i]) {
                            same[o] = false;
                        }
                    }
                }
            }
        }
        Literal lit{h, {}};
        for (OptionIndex o = 0; o < k; ++o) {
            if (same[o]) {
                lit.options.push_back(o);
            }
        }
        clause.literals.push_back(std::move(lit));
    }
    return clause;
}

namespace {

LearnedClause singleton_clause(const Realisation& r, ClauseVerdict verdict) {
    LearnedClause clause;
    clause.verdict = verdict;
    for (HoleId h = 0; h < r.options.size(); ++h) {
        clause.literals.push_back({h, {r.options[h]}});
    }
    return clause;
}

} // namespace

AssignmentSpace::AssignmentSpace(const Family& fam, const Subfamily& scope,
                                 std::optional<std::uint64_t> option_sum_budget)
    : _family(&fam), _budget(option_sum_budget) {
    for (HoleId h = 0; h < fam.num_holes(); ++h) {
        std::vector<bool> dom(fam.hole(h).options.size(), false);
        for (OptionIndex o : scope.options(h)) {
            dom[o] = true;
        }
        _root.push_back(std::move(dom));
        _refuted_at.emplace_back(fam.hole(h).options.size(), 0);
    }
}

void AssignmentSpace::learn(LearnedClause clause) {
    for (const auto& lit : clause.literals) {
        if (lit.hole >= _root.size() || !std::is_sorted(lit.options.begin(), lit.options.end())) {
            throw ModelError("malformed learned clause");
        }
    }
    _clauses.push_back(std::move(clause));
}

void AssignmentSpace::note_refuted(const Realisation& r) {
    ++_clock;
    for (HoleId h = 0; h < r.options.size(); ++h) {
        _refuted_at[h][r.options[h]] = _clock;
    }
}

std::optional<ClauseVerdict> AssignmentSpace::classify(const Realisation& r) const {
    for (const auto& clause : _clauses) {
        if (clause.matches(r)) {
            return clause.verdict;
        }
    }
    return std::nullopt;
}

bool AssignmentSpace::propagate(Domains& d) const {
    const Family& fam = *_family;
    auto size_of = [&](HoleId h) { return static_cast<std::size_t>(std::count(d[h].begin(), d[h].end(), true)); };
    bool changed = true;
    while (changed) {
        changed = false;
        for (HoleId h = 0; h < d.size(); ++h) {
            if (size_of(h) == 0) {
                return false;
            }
        }
        // A clause blocks every completion once each literal is forced.
        for (const auto& clause : _clauses) {
            std::optional<std::size_t> open;
            bool escapes = false;
            std::size_t mixed = 0;
            for (std::size_t i = 0; i < clause.literals.size() && !escapes; ++i) {
                const auto& lit = clause.literals[i];
                std::size_t inside = 0;
                std::size_t total = 0;
                for (OptionIndex o = 0; o < d[lit.hole].size(); ++o) {
                    if (d[lit.hole][o]) {
                        ++total;
                        inside += std::binary_search(lit.options.begin(), lit.options.end(), o) ? 1 : 0;
                    }
                }
                if (inside == 0) {
                    escapes = true;
                } else if (inside < total) {
                    ++mixed;
                    open = i;
                }
            }
            if (escapes || mixed > 1) {
                continue;
            }
            if (mixed == 0) {
                return false;
            }
            const auto& lit = clause.literals[*open];
            for (OptionIndex o : lit.options) {
                if (o < d[lit.hole].size() && d[lit.hole][o]) {
                    d[lit.hole][o] = false;
                    changed = true;
                }
            }
        }
        PartialAssignment partial(d.size());
        for (HoleId h = 0; h < d.size(); ++h) {
            if (size_of(h) == 1) {
                partial[h] = static_cast<OptionIndex>(std::find(d[h].begin(), d[h].end(), true) - d[h].begin());
            }
        }
        for (const auto& c : fam.constraints()) {
            std::optional<bool> v = c.evaluate(partial);
            if (v == std::optional<bool>(false)) {
                return false;
            }
            if (v) {
                continue;
            }
            std::vector<HoleId> open;
            for (HoleId h : c.holes()) {
                if (!partial[h]) {
                    open.push_back(h);
                }
            }
            if (open.size() != 1) {
                continue;
            }
            HoleId h = open.front();
            PartialAssignment probe = partial;
            for (OptionIndex o = 0; o < d[h].size(); ++o) {
                if (!d[h][o]) {
                    continue;
                }
                probe[h] = o;
                if (c.evaluate(probe) == std::optional<bool>(false)) {
                    d[h][o] = false;
                    changed = true;
                }
            }
        }
        if (_budget) {
            std::vector<std::uint64_t> cheapest(d.size(), std::numeric_limits<std::uint64_t>::max());
            std::uint64_t floor = 0;
            for (HoleId h = 0; h < d.size(); ++h) {
                for (OptionIndex o = 0; o < d[h].size(); ++o) {
                    if (d[h][o]) {
                        cheapest[h] = std::min(cheapest[h], fam.hole(h).costs[o]);
                    }
                }
                floor += cheapest[h];
            }
            if (floor > *_budget) {
                return false;
            }
            for (HoleId h = 0; h < d.size(); ++h) {
                for (OptionIndex o = 0; o < d[h].size(); ++o) {
                    if (d[h][o] && floor - cheapest[h] + fam.hole(h).costs[o] > *_budget) {
                        d[h][o] = false;
                        changed = true;
                    }
                }
            }
        }
    }
    return true;
}

bool AssignmentSpace::search(Domains& d, Realisation& out) const {
    if (!propagate(d)) {
        return false;
    }
    std::optional<HoleId> branch;
    for (HoleId h = 0; h < d.size(); ++h) {
        if (std::count(d[h].begin(), d[h].end(), true) > 1) {
            branch = h;
            break;
        }
    }
    if (!branch) {
        out.options.assign(d.size(), 0);
        for (HoleId h = 0; h < d.size(); ++h) {
            out.options[h] = static_cast<OptionIndex>(std::find(d[h].begin(), d[h].end(), true) - d[h].begin());
        }
        return _family->satisfies_constraints(out) && !classify(out).has_value();
    }
    HoleId h = *branch;
    std::vector<OptionIndex> order;
    for (OptionIndex o = 0; o < d[h].size(); ++o) {
        if (d[h][o]) {
            order.push_back(o);
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](OptionIndex a, OptionIndex b) { return _refuted_at[h][a] < _refuted_at[h][b]; });
    for (OptionIndex o : order) {
        Domains child = d;
        std::fill(child[h].begin(), child[h].end(), false);
        child[h][o] = true;
        if (search(child, out)) {
            return true;
        }
        d[h][o] = false;
    }
    return false;
}

std::optional<Realisation> AssignmentSpace::next_candidate() {
    Domains d = _root;
    Realisation r;
    if (search(d, r)) {
        return r;
    }
    return std::nullopt;
}

namespace {

class Cegis {
public:
    Cegis(const Family& fam, const SynthesisQuery& query, CegisDiagnostics* diagnostics)
        : _fam(fam), _query(query), _scope(effective_scope(fam, query)),
          _space(fam, _scope,
                 query.budget && effective_cost_model(fam, query) == CostModel::OptionSum ? query.budget
                                                                                           : std::nullopt),
          _diagnostics(diagnostics) {}

    SynthesisOutcome run() {
        bool optimise = _query.kind == QueryKind::Max || _query.kind == QueryKind::Min ||
                        _query.kind == QueryKind::EpsOptimal;
        if (optimise) {
            optimise_loop();
        } else {
            threshold_loop();
        }
        if (_diagnostics != nullptr) {
            _diagnostics->clauses = _space.clauses();
        }
        return std::move(_out);
    }

private:
    std::uint64_t clause_scope(const LearnedClause& clause) const {
        std::uint64_t n = 1;
        std::vector<bool> bound(_fam.num_holes(), false);
        for (const auto& lit : clause.literals) {
            bound[lit.hole] = true;
            std::uint64_t k = 0;
            for (OptionIndex o : lit.options) {
                k += _scope.allows(lit.hole, o) ? 1 : 0;
            }
            n *= k;
        }
        for (HoleId h = 0; h < _fam.num_holes(); ++h) {
            if (!bound[h]) {
                n *= _scope.options(h).size();
            }
        }
        return n;
    }

    void learn(const Realisation& r, LearnedClause clause, const StateSet* critical, std::optional<double> value) {
        TraceRecord rec{"check", 1};
        rec.candidate = r;
        rec.verdict = clause.verdict == ClauseVerdict::Accept   ? "accept"
                      : clause.verdict == ClauseVerdict::Reject ? "reject"
                                                                : "over-budget";
        rec.lower = rec.upper = value;
        if (critical != nullptr) {
            rec.critical = critical->members();
            rec.holes = conflict_holes(_fam, *critical);
        }
        rec.scope = clause_scope(clause);
        _out.trace.push_back(std::move(rec));
        _space.learn(std::move(clause));
    }

    void threshold_loop() {
        const Specification& spec = _query.spec;
        bool upper = is_upper_bound(spec.op);
        while (auto cand = _space.next_candidate()) {
            ++_out.stats.iterations;
            ++_out.stats.candidates;
            if (!within_budget(_fam, _query, *cand)) {
                learn(*cand, singleton_clause(*cand, ClauseVerdict::Excluded), nullptr, std::nullopt);
                continue;
            }
            MarkovChain chain = realise(_fam, *cand);
            double v = reach_probability(chain, spec.goal, _query.solver)[chain.initial()];
            ++_out.stats.checks;
            bool sat = compare(v, spec.op, spec.threshold, spec.tolerance);
            if (sat != upper) {
                // Violated upper bound or met lower bound: a sub-chain carries
                // the verdict to every member sharing its rows.
                StateSet critical = extract_counterexample(
                    chain, spec, sat ? ExtractionMode::Establish : ExtractionMode::Refute, _query.solver);
                auto verdict = sat ? ClauseVerdict::Accept : ClauseVerdict::Reject;
                learn(*cand, generalise(_fam, *cand, critical, verdict), &critical, v);
            } else {
                learn(*cand, singleton_clause(*cand, sat ? ClauseVerdict::Accept : ClauseVerdict::Reject), nullptr,
                      v);
            }
            if (!sat) {
                _space.note_refuted(*cand);
            }
            if (sat && _query.kind == QueryKind::Feasibility) {
                _out.kind = OutcomeKind::Witness;
                _out.witness = *cand;
                _out.value = v;
                return;
            }
        }
        std::uint64_t members = 0;
        for (auto& r : enumerate_realisations(_fam, _scope)) {
            ++members;
            if (_query.kind != QueryKind::Partition) {
                continue;
            }
            bool sat = within_budget(_fam, _query, r) && _space.classify(r) == std::optional(ClauseVerdict::Accept);
            (sat ? _out.satisfying : _out.violating).push_back(std::move(r));
        }
        _out.stats.pruned = members - _out.stats.checks;
        _out.kind = _query.kind == QueryKind::Partition ? OutcomeKind::Partition : OutcomeKind::Unsatisfiable;
    }

    void optimise_loop() {
        bool minimise = _query.kind == QueryKind::Min;
        std::optional<std::pair<Realisation, double>> best;
        auto improves = [&](double v, const Realisation& r) {
            if (!best) {
                return true;
            }
            double b = best->second;
            if (minimise ? v < b - kValueTieTolerance : v > b + kValueTieTolerance) {
                return true;
            }
            return std::abs(v - b) <= kValueTieTolerance && r < best->first;
        };
        auto settled = [&] {
            if (!best) {
                return false;
            }
            double b = best->second;
            switch (_query.kind) {
            case QueryKind::Min:
                return b <= 0.0;
            case QueryKind::EpsOptimal:
                return b >= (1.0 - _query.epsilon) * 1.0 - kValueTieTolerance;
            default:
                return b >= 1.0;
            }
        };
        while (!settled()) {
            auto cand = _space.next_candidate();
            if (!cand) {
                break;
            }
            ++_out.stats.iterations;
            ++_out.stats.candidates;
            if (!within_budget(_fam, _query, *cand)) {
                learn(*cand, singleton_clause(*cand, ClauseVerdict::Excluded), nullptr, std::nullopt);
                continue;
            }
            MarkovChain chain = realise(_fam, *cand);
            double v = reach_probability(chain, _query.spec.goal, _query.solver)[chain.initial()];
            ++_out.stats.checks;
            if (improves(v, *cand)) {
                best = {*cand, v};
            }
            if (minimise) {
                // Nothing sharing this candidate's critical rows can drop
                // below the incumbent.
                Specification bar{_query.spec.goal, ComparisonOp::Less, best->second, kValueTieTolerance};
                StateSet critical = extract_counterexample(chain, bar, ExtractionMode::Refute, _query.solver);
                learn(*cand, generalise(_fam, *cand, critical, ClauseVerdict::Reject), &critical, v);
            } else {
                learn(*cand, singleton_clause(*cand, ClauseVerdict::Reject), nullptr, v);
            }
            _space.note_refuted(*cand);
        }
        if (best) {
            _out.kind = OutcomeKind::Optimum;
            _out.witness = best->first;
            _out.value = best->second;
        } else {
            _out.kind = OutcomeKind::Unsatisfiable;
        }
    }

    const Family& _fam;
    const SynthesisQuery& _query;
    Subfamily _scope;
    AssignmentSpace _space;
    CegisDiagnostics* _diagnostics;
    SynthesisOutcome _out;
};

} // namespace

SynthesisOutcome cegis_solve(const Family& fam, const SynthesisQuery& query, CegisDiagnostics* diagnostics) {
    validate_query(fam, query);
    return Cegis(fam, query, diagnostics).run();
}

} // namespace chainsynth
