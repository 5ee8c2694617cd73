#include "chainsynth/family.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <sstream>

namespace chainsynth {

namespace {

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
        return std::numeric_limits<std::uint64_t>::max();
    }
    return a * b;
}

std::size_t table_size(const std::vector<Hole>& holes, const std::vector<HoleId>& ids) {
    std::size_t size = 1;
    for (HoleId h : ids) {
        size *= holes[h].options.size();
    }
    return size;
}

} // namespace

Formula Formula::constant(bool value) {
    Formula f;
    f.kind = value ? Kind::True : Kind::False;
    return f;
}

Formula Formula::atom(HoleId hole, OptionIndex option) {
    Formula f;
    f.kind = Kind::Atom;
    f.hole = hole;
    f.option = option;
    return f;
}

Formula Formula::negation(Formula arg) {
    Formula f;
    f.kind = Kind::Not;
    f.args.push_back(std::move(arg));
    return f;
}

Formula Formula::conjunction(std::vector<Formula> fs) {
    Formula f;
    f.kind = Kind::And;
    f.args = std::move(fs);
    return f;
}

Formula Formula::disjunction(std::vector<Formula> fs) {
    Formula f;
    f.kind = Kind::Or;
    f.args = std::move(fs);
    return f;
}

Formula Formula::implication(Formula lhs, Formula rhs) {
    Formula f;
    f.kind = Kind::Implies;
    f.args.push_back(std::move(lhs));
    f.args.push_back(std::move(rhs));
    return f;
}

Formula Formula::equivalence(Formula lhs, Formula rhs) {
    Formula f;
    f.kind = Kind::Iff;
    f.args.push_back(std::move(lhs));
    f.args.push_back(std::move(rhs));
    return f;
}

bool Formula::evaluate(const Realisation& r) const {
    switch (kind) {
    case Kind::True:
        return true;
    case Kind::False:
        return false;
    case Kind::Atom:
        return r.options.at(hole) == option;
    case Kind::Not:
        return !args[0].evaluate(r);
    case Kind::And:
        return std::all_of(args.begin(), args.end(), [&](const Formula& f) { return f.evaluate(r); });
    case Kind::Or:
        return std::any_of(args.begin(), args.end(), [&](const Formula& f) { return f.evaluate(r); });
    case Kind::Implies:
        return !args[0].evaluate(r) || args[1].evaluate(r);
    case Kind::Iff:
        return args[0].evaluate(r) == args[1].evaluate(r);
    }
    return false;
}

std::optional<bool> Formula::evaluate(const PartialAssignment& a) const {
    switch (kind) {
    case Kind::True:
        return true;
    case Kind::False:
        return false;
    case Kind::Atom:
        if (!a.at(hole)) {
            return std::nullopt;
        }
        return *a[hole] == option;
    case Kind::Not: {
        auto v = args[0].evaluate(a);
        return v ? std::optional<bool>(!*v) : std::nullopt;
    }
    case Kind::And: {
        bool open = false;
        for (const auto& f : args) {
            auto v = f.evaluate(a);
            if (!v) {
                open = true;
            } else if (!*v) {
                return false;
            }
        }
        return open ? std::nullopt : std::optional<bool>(true);
    }
    case Kind::Or: {
        bool open = false;
        for (const auto& f : args) {
            auto v = f.evaluate(a);
            if (!v) {
                open = true;
            } else if (*v) {
                return true;
            }
        }
        return open ? std::nullopt : std::optional<bool>(false);
    }
    case Kind::Implies: {
        auto lhs = args[0].evaluate(a);
        auto rhs = args[1].evaluate(a);
        if ((lhs && !*lhs) || (rhs && *rhs)) {
            return true;
        }
        if (lhs && rhs) {
            return false;
        }
        return std::nullopt;
    }
    case Kind::Iff: {
        auto lhs = args[0].evaluate(a);
        auto rhs = args[1].evaluate(a);
        if (lhs && rhs) {
            return *lhs == *rhs;
        }
        return std::nullopt;
    }
    }
    return std::nullopt;
}

std::vector<HoleId> Formula::holes() const {
    std::set<HoleId> out;
    std::deque<const Formula*> todo{this};
    while (!todo.empty()) {
        const Formula* f = todo.front();
        todo.pop_front();
        if (f->kind == Kind::Atom) {
            out.insert(f->hole);
        }
        for (const auto& g : f->args) {
            todo.push_back(&g);
        }
    }
    return {out.begin(), out.end()};
}

std::string to_string(CostModel model) {
    return model == CostModel::Structural ? "structural" : "option-sum";
}

Subfamily::Subfamily(std::vector<std::vector<OptionIndex>> remaining) : _remaining(std::move(remaining)) {
    for (auto& opts : _remaining) {
        std::sort(opts.begin(), opts.end());
        opts.erase(std::unique(opts.begin(), opts.end()), opts.end());
        if (opts.empty()) {
            throw ModelError("subfamily leaves a hole without options");
        }
    }
}

bool Subfamily::allows(HoleId h, OptionIndex o) const {
    return std::binary_search(_remaining[h].begin(), _remaining[h].end(), o);
}

bool Subfamily::contains(const Realisation& r) const {
    if (r.options.size() != _remaining.size()) {
        return false;
    }
    for (HoleId h = 0; h < _remaining.size(); ++h) {
        if (!allows(h, r.options[h])) {
            return false;
        }
    }
    return true;
}

std::uint64_t Subfamily::product_size() const {
    std::uint64_t size = 1;
    for (const auto& opts : _remaining) {
        size = saturating_mul(size, opts.size());
    }
    return size;
}

bool Subfamily::is_singleton() const {
    return std::all_of(_remaining.begin(), _remaining.end(), [](const auto& o) { return o.size() == 1; });
}

Realisation Subfamily::singleton() const {
    Realisation r;
    for (const auto& opts : _remaining) {
        r.options.push_back(opts.front());
    }
    return r;
}

Subfamily Subfamily::restricted(HoleId h, std::vector<OptionIndex> options) const {
    auto copy = _remaining;
    copy.at(h) = std::move(options);
    return Subfamily(std::move(copy));
}

Family::Family(std::size_t num_states, StateIndex initial, std::vector<Hole> holes,
               std::vector<std::vector<Branch>> rows, std::vector<Formula> constraints, CostModel cost_model)
    : _initial(initial), _holes(std::move(holes)), _rows(std::move(rows)), _constraints(std::move(constraints)),
      _cost_model(cost_model) {
    if (_rows.size() != num_states) {
        throw ModelError("family declares " + std::to_string(num_states) + " states but defines " +
                         std::to_string(_rows.size()) + " rows");
    }
    if (num_states == 0 || _initial >= num_states) {
        throw ModelError("initial state outside the state space");
    }
    std::set<std::string> names;
    for (auto& hole : _holes) {
        if (hole.options.empty()) {
            throw ModelError("hole " + hole.name + " has no options");
        }
        if (!names.insert(hole.name).second) {
            throw ModelError("duplicate hole " + hole.name);
        }
        std::set<std::string> labels(hole.options.begin(), hole.options.end());
        if (labels.size() != hole.options.size()) {
            throw ModelError("hole " + hole.name + " has duplicate option labels");
        }
        if (hole.costs.empty()) {
            hole.costs.assign(hole.options.size(), 0);
        }
        if (hole.costs.size() != hole.options.size()) {
            throw ModelError("hole " + hole.name + " needs one cost per option");
        }
    }
    for (std::size_t s = 0; s < _rows.size(); ++s) {
        const auto where = "state " + std::to_string(s);
        if (_rows[s].empty()) {
            throw ModelError(where + " has no transitions");
        }
        double total = 0.0;
        for (const auto& b : _rows[s]) {
            if (!(b.probability > 0.0) || b.probability > 1.0 + kDistributionTolerance) {
                throw ModelError(where + " has a branch probability outside (0, 1]");
            }
            total += b.probability;
            if (const auto* f = std::get_if<FixedTarget>(&b.target)) {
                if (f->state >= num_states) {
                    throw ModelError(where + " targets unknown state " + std::to_string(f->state));
                }
                continue;
            }
            const auto& ref = std::get<HoleTarget>(b.target);
            if (ref.holes.empty()) {
                throw ModelError(where + " has a hole target without holes");
            }
            for (std::size_t i = 0; i < ref.holes.size(); ++i) {
                if (ref.holes[i] >= _holes.size()) {
                    throw ModelError(where + " refers to unknown hole " + std::to_string(ref.holes[i]));
                }
                if (i > 0 && ref.holes[i - 1] >= ref.holes[i]) {
                    throw ModelError(where + " lists hole target holes out of order");
                }
            }
            if (ref.table.size() != table_size(_holes, ref.holes)) {
                throw ModelError(where + " has a successor table of the wrong size");
            }
            for (StateIndex t : ref.table) {
                if (t >= num_states) {
                    throw ModelError(where + " targets unknown state " + std::to_string(t));
                }
            }
        }
        if (std::abs(total - 1.0) > kDistributionTolerance) {
            throw ModelError(where + " has branch probabilities summing to " + std::to_string(total));
        }
    }
    for (const auto& c : _constraints) {
        std::deque<const Formula*> todo{&c};
        while (!todo.empty()) {
            const Formula* f = todo.front();
            todo.pop_front();
            if (f->kind == Formula::Kind::Atom &&
                (f->hole >= _holes.size() || f->option >= _holes[f->hole].options.size())) {
                throw ModelError("constraint refers to an unknown hole option");
            }
            for (const auto& g : f->args) {
                todo.push_back(&g);
            }
        }
    }
}

std::optional<HoleId> Family::find_hole(const std::string& name) const {
    for (HoleId h = 0; h < _holes.size(); ++h) {
        if (_holes[h].name == name) {
            return h;
        }
    }
    return std::nullopt;
}

std::optional<OptionIndex> Family::find_option(HoleId h, const std::string& label) const {
    const auto& opts = _holes.at(h).options;
    auto it = std::find(opts.begin(), opts.end(), label);
    if (it == opts.end()) {
        return std::nullopt;
    }
    return static_cast<OptionIndex>(it - opts.begin());
}

std::vector<HoleId> Family::holes_of_state(StateIndex s) const {
    std::set<HoleId> out;
    for (const auto& b : _rows[s]) {
        if (const auto* ref = std::get_if<HoleTarget>(&b.target)) {
            out.insert(ref->holes.begin(), ref->holes.end());
        }
    }
    return {out.begin(), out.end()};
}

Subfamily Family::full_subfamily() const {
    std::vector<std::vector<OptionIndex>> remaining;
    for (const auto& hole : _holes) {
        std::vector<OptionIndex> all(hole.options.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            all[i] = i;
        }
        remaining.push_back(std::move(all));
    }
    return Subfamily(std::move(remaining));
}

bool Family::satisfies_constraints(const Realisation& r) const {
    return std::all_of(_constraints.begin(), _constraints.end(), [&](const Formula& f) { return f.evaluate(r); });
}

void Family::validate_realisation(const Realisation& r) const {
    if (r.options.size() != _holes.size()) {
        throw ModelError("realisation assigns " + std::to_string(r.options.size()) + " of " +
                         std::to_string(_holes.size()) + " holes");
    }
    for (HoleId h = 0; h < _holes.size(); ++h) {
        if (r.options[h] >= _holes[h].options.size()) {
            throw ModelError("hole " + _holes[h].name + " has no option " + std::to_string(r.options[h]));
        }
    }
}

std::uint64_t Family::design_space_size() const {
    std::uint64_t size = 1;
    for (const auto& h : _holes) {
        size = saturating_mul(size, h.options.size());
    }
    return size;
}

StateIndex resolve(const Family& fam, const HoleTarget& target, const Realisation& r) {
    std::size_t index = 0;
    for (HoleId h : target.holes) {
        index = index * fam.hole(h).options.size() + r.options[h];
    }
    return target.table[index];
}

StateIndex resolve(const Family& fam, const Target& target, const Realisation& r) {
    if (const auto* f = std::get_if<FixedTarget>(&target)) {
        return f->state;
    }
    return resolve(fam, std::get<HoleTarget>(target), r);
}

Distribution realise_row(const Family& fam, StateIndex s, const Realisation& r) {
    std::vector<Transition> entries;
    entries.reserve(fam.row(s).size());
    for (const auto& b : fam.row(s)) {
        entries.push_back({resolve(fam, b.target, r), b.probability});
    }
    return Distribution(std::move(entries));
}

MarkovChain realise(const Family& fam, const Realisation& r) {
    fam.validate_realisation(r);
    if (!fam.satisfies_constraints(r)) {
        throw ModelError("realisation " + to_string(fam, r) + " violates the family constraints");
    }
    std::vector<Distribution> rows;
    rows.reserve(fam.num_states());
    for (std::size_t s = 0; s < fam.num_states(); ++s) {
        rows.push_back(realise_row(fam, static_cast<StateIndex>(s), r));
    }
    return MarkovChain(fam.initial(), std::move(rows));
}

RealisationEnumerator::RealisationEnumerator(const Family& fam, Subfamily sub)
    : _family(&fam), _sub(std::move(sub)), _cursor(_sub.num_holes(), 0) {
    if (_sub.num_holes() != fam.num_holes()) {
        throw ModelError("subfamily does not match the family's holes");
    }
}

std::optional<Realisation> RealisationEnumerator::next() {
    while (!_done) {
        Realisation r;
        r.options.reserve(_cursor.size());
        for (HoleId h = 0; h < _cursor.size(); ++h) {
            r.options.push_back(_sub.options(h)[_cursor[h]]);
        }
        // Advance the odometer, last hole fastest.
        std::size_t h = _cursor.size();
        while (h > 0) {
            --h;
            if (++_cursor[h] < _sub.options(h).size()) {
                break;
            }
            _cursor[h] = 0;
            if (h == 0) {
                _done = true;
            }
        }
        if (_cursor.empty()) {
            _done = true;
        }
        if (_family->satisfies_constraints(r)) {
            return r;
        }
    }
    return std::nullopt;
}

std::vector<Realisation> enumerate_realisations(const Family& fam, const Subfamily& sub) {
    std::vector<Realisation> out;
    RealisationEnumerator it(fam, sub);
    while (auto r = it.next()) {
        out.push_back(std::move(*r));
    }
    return out;
}

std::uint64_t count_realisations(const Family& fam, const Subfamily& sub) {
    if (fam.constraints().empty()) {
        return sub.product_size();
    }
    std::uint64_t count = 0;
    RealisationEnumerator it(fam, sub);
    while (it.next()) {
        ++count;
    }
    return count;
}

std::uint64_t cost(const Family& fam, const Realisation& r, CostModel model) {
    fam.validate_realisation(r);
    if (model == CostModel::OptionSum) {
        std::uint64_t total = 0;
        for (HoleId h = 0; h < fam.num_holes(); ++h) {
            total += fam.hole(h).costs[r.options[h]];
        }
        return total;
    }
    // Reachable states plus their outgoing transitions in D_r.
    std::vector<bool> seen(fam.num_states(), false);
    std::deque<StateIndex> queue{fam.initial()};
    seen[fam.initial()] = true;
    std::uint64_t states = 0;
    std::uint64_t transitions = 0;
    while (!queue.empty()) {
        StateIndex s = queue.front();
        queue.pop_front();
        ++states;
        Distribution row = realise_row(fam, s, r);
        transitions += row.size();
        for (const auto& e : row) {
            if (!seen[e.target]) {
                seen[e.target] = true;
                queue.push_back(e.target);
            }
        }
    }
    return states + transitions;
}

std::string to_string(const Family& fam, const Realisation& r) {
    std::ostringstream out;
    for (HoleId h = 0; h < r.options.size() && h < fam.num_holes(); ++h) {
        if (h > 0) {
            out << ',';
        }
        out << fam.hole(h).name << '=' << fam.hole(h).options.at(r.options[h]);
    }
    return out.str();
}

Realisation parse_assignment(const Family& fam, const std::string& text) {
    std::vector<std::optional<OptionIndex>> chosen(fam.num_holes());
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) {
            continue;
        }
        auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ModelError("assignment item '" + item + "' lacks '='");
        }
        std::string name = item.substr(0, eq);
        std::string label = item.substr(eq + 1);
        auto h = fam.find_hole(name);
        if (!h) {
            throw ModelError("unknown hole '" + name + "'");
        }
        auto o = fam.find_option(*h, label);
        if (!o) {
            throw ModelError("hole '" + name + "' has no option '" + label + "'");
        }
        if (chosen[*h]) {
            throw ModelError("hole '" + name + "' assigned twice");
        }
        chosen[*h] = *o;
    }
    Realisation r;
    for (HoleId h = 0; h < chosen.size(); ++h) {
        if (!chosen[h]) {
            throw ModelError("assignment leaves hole '" + fam.hole(h).name + "' open");
        }
        r.options.push_back(*chosen[h]);
    }
    return r;
}

} // namespace chainsynth
