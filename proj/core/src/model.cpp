#include "chainsynth/model.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace chainsynth {

Distribution::Distribution(std::vector<Transition> entries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Transition& a, const Transition& b) { return a.target < b.target; });
    double total = 0.0;
    for (const auto& e : entries) {
        if (!(e.probability > 0.0) || e.probability > 1.0 + kDistributionTolerance) {
            std::ostringstream msg;
            msg << "probability " << e.probability << " towards state " << e.target << " outside (0, 1]";
            throw ModelError(msg.str());
        }
        total += e.probability;
        if (!_entries.empty() && _entries.back().target == e.target) {
            _entries.back().probability += e.probability;
        } else {
            _entries.push_back(e);
        }
    }
    if (std::abs(total - 1.0) > kDistributionTolerance) {
        std::ostringstream msg;
        msg << "distribution sums to " << total;
        throw ModelError(msg.str());
    }
}

Distribution Distribution::dirac(StateIndex target) {
    return Distribution({{target, 1.0}});
}

double Distribution::probability_of(StateIndex target) const {
    auto it = std::lower_bound(_entries.begin(), _entries.end(), target,
                               [](const Transition& t, StateIndex s) { return t.target < s; });
    return (it != _entries.end() && it->target == target) ? it->probability : 0.0;
}

StateSet::StateSet(std::size_t universe, const std::vector<StateIndex>& members) : _bits(universe, false) {
    for (StateIndex s : members) {
        insert(s);
    }
}

void StateSet::insert(StateIndex s) {
    if (s >= _bits.size()) {
        throw ModelError("state " + std::to_string(s) + " outside state space of size " +
                         std::to_string(_bits.size()));
    }
    _bits[s] = true;
}

void StateSet::erase(StateIndex s) {
    if (s < _bits.size()) {
        _bits[s] = false;
    }
}

std::size_t StateSet::count() const {
    return static_cast<std::size_t>(std::count(_bits.begin(), _bits.end(), true));
}

std::vector<StateIndex> StateSet::members() const {
    std::vector<StateIndex> out;
    for (std::size_t s = 0; s < _bits.size(); ++s) {
        if (_bits[s]) {
            out.push_back(static_cast<StateIndex>(s));
        }
    }
    return out;
}

StateSet StateSet::resized(std::size_t universe) const {
    return StateSet(universe, members());
}

namespace {

void check_targets(const Distribution& d, std::size_t n, std::size_t state) {
    if (d.empty()) {
        throw ModelError("state " + std::to_string(state) + " has an empty distribution");
    }
    for (const auto& e : d) {
        if (e.target >= n) {
            throw ModelError("state " + std::to_string(state) + " refers to unknown state " +
                             std::to_string(e.target));
        }
    }
}

} // namespace

MarkovChain::MarkovChain(StateIndex initial, std::vector<Distribution> rows)
    : _initial(initial), _rows(std::move(rows)) {
    if (_initial >= _rows.size()) {
        throw ModelError("initial state outside the state space");
    }
    for (std::size_t s = 0; s < _rows.size(); ++s) {
        check_targets(_rows[s], _rows.size(), s);
    }
}

std::size_t MarkovChain::num_transitions() const {
    std::size_t total = 0;
    for (const auto& r : _rows) {
        total += r.size();
    }
    return total;
}

Mdp::Mdp(StateIndex initial, std::vector<std::vector<Action>> actions)
    : _initial(initial), _actions(std::move(actions)) {
    if (_initial >= _actions.size()) {
        throw ModelError("initial state outside the state space");
    }
    for (std::size_t s = 0; s < _actions.size(); ++s) {
        if (_actions[s].empty()) {
            throw ModelError("state " + std::to_string(s) + " has no enabled action");
        }
        for (const auto& a : _actions[s]) {
            check_targets(a.distribution, _actions.size(), s);
        }
    }
}

Mdp Mdp::from_chain(const MarkovChain& chain) {
    std::vector<std::vector<Action>> actions;
    actions.reserve(chain.num_states());
    for (const auto& row : chain.rows()) {
        actions.push_back({Action{"", row}});
    }
    return Mdp(chain.initial(), std::move(actions));
}

std::size_t Mdp::num_choices() const {
    std::size_t total = 0;
    for (const auto& a : _actions) {
        total += a.size();
    }
    return total;
}

MarkovChain Mdp::to_chain() const {
    std::vector<Distribution> rows;
    rows.reserve(_actions.size());
    for (std::size_t s = 0; s < _actions.size(); ++s) {
        if (_actions[s].size() != 1) {
            throw ModelError("state " + std::to_string(s) + " is nondeterministic");
        }
        rows.push_back(_actions[s].front().distribution);
    }
    return MarkovChain(_initial, std::move(rows));
}

std::string to_string(ComparisonOp op) {
    switch (op) {
    case ComparisonOp::Less:
        return "<";
    case ComparisonOp::LessEqual:
        return "<=";
    case ComparisonOp::GreaterEqual:
        return ">=";
    case ComparisonOp::Greater:
        return ">";
    }
    return "?";
}

bool is_upper_bound(ComparisonOp op) {
    return op == ComparisonOp::Less || op == ComparisonOp::LessEqual;
}

bool compare(double value, ComparisonOp op, double threshold, double tolerance) {
    switch (op) {
    case ComparisonOp::Less:
        return value < threshold - tolerance;
    case ComparisonOp::LessEqual:
        return value <= threshold + tolerance;
    case ComparisonOp::GreaterEqual:
        return value >= threshold - tolerance;
    case ComparisonOp::Greater:
        return value > threshold + tolerance;
    }
    return false;
}

void Specification::validate(std::size_t num_states) const {
    if (goal.universe() != num_states) {
        throw ModelError("goal set is defined over " + std::to_string(goal.universe()) +
                         " states but the model has " + std::to_string(num_states));
    }
    if (goal.empty()) {
        throw ModelError("goal set is empty");
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ModelError("threshold must lie in [0, 1]");
    }
}

void dump(std::ostream& out, const MarkovChain& chain) {
    for (std::size_t s = 0; s < chain.num_states(); ++s) {
        out << "state " << s << ":";
        const char* sep = " ";
        for (const auto& e : chain.row(static_cast<StateIndex>(s))) {
            out << sep << e.probability << " -> " << e.target;
            sep = ", ";
        }
        out << '\n';
    }
}

void dump(std::ostream& out, const Mdp& mdp) {
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        for (const auto& a : mdp.actions(static_cast<StateIndex>(s))) {
            out << "state " << s;
            if (!a.label.empty()) {
                out << " [" << a.label << "]";
            }
            out << ":";
            const char* sep = " ";
            for (const auto& e : a.distribution) {
                out << sep << e.probability << " -> " << e.target;
                sep = ", ";
            }
            out << '\n';
        }
    }
}

} // namespace chainsynth
