#include "chainsynth/quotient.hpp"

#include <algorithm>
#include <sstream>

namespace chainsynth {

AllInOneMdp all_in_one_mdp(const Family& fam, std::uint64_t bound) {
    AllInOneMdp out;
    out.family_states = fam.num_states();
    RealisationEnumerator it(fam, fam.full_subfamily());
    while (auto r = it.next()) {
        if (out.realisations.size() >= bound) {
            throw ModelError("family exceeds " + std::to_string(bound) +
                             " members; use the quotient MDP instead");
        }
        out.realisations.push_back(std::move(*r));
    }
    const std::size_t n = fam.num_states();
    std::vector<std::vector<Action>> actions;
    actions.reserve(1 + out.realisations.size() * n);
    std::vector<Action> initial;
    for (std::size_t i = 0; i < out.realisations.size(); ++i) {
        initial.push_back(Action{to_string(fam, out.realisations[i]),
                                 Distribution::dirac(out.state_of(fam.initial(), i))});
    }
    actions.push_back(std::move(initial));
    for (std::size_t i = 0; i < out.realisations.size(); ++i) {
        for (std::size_t s = 0; s < n; ++s) {
            Distribution row = realise_row(fam, static_cast<StateIndex>(s), out.realisations[i]);
            std::vector<Transition> shifted;
            for (const auto& e : row) {
                shifted.push_back({out.state_of(e.target, i), e.probability});
            }
            actions.push_back({Action{"", Distribution(std::move(shifted))}});
        }
    }
    if (out.realisations.empty()) {
        throw ModelError("family has no member satisfying its constraints");
    }
    out.mdp = Mdp(0, std::move(actions));
    return out;
}

QuotientMdp quotient_mdp(const Family& fam, const Subfamily& sub) {
    if (sub.num_holes() != fam.num_holes()) {
        throw ModelError("subfamily does not match the family's holes");
    }
    const std::size_t n = fam.num_states();
    QuotientMdp out;
    out.fresh_initial = static_cast<StateIndex>(n);
    out.num_holes = fam.num_holes();
    out.subfamily = sub;
    out.choices.resize(n + 1);

    std::vector<std::vector<Action>> actions(n + 1);
    Realisation scratch = sub.singleton();
    for (std::size_t s = 0; s < n; ++s) {
        auto si = static_cast<StateIndex>(s);
        std::vector<HoleId> holes = fam.holes_of_state(si);
        std::vector<std::size_t> cursor(holes.size(), 0);
        while (true) {
            std::vector<HoleChoice> choice;
            std::ostringstream label;
            for (std::size_t i = 0; i < holes.size(); ++i) {
                OptionIndex o = sub.options(holes[i])[cursor[i]];
                scratch.options[holes[i]] = o;
                choice.push_back({holes[i], o});
                label << (i > 0 ? "," : "") << fam.hole(holes[i]).name << '=' << fam.hole(holes[i]).options[o];
            }
            actions[s].push_back(Action{label.str(), realise_row(fam, si, scratch)});
            out.choices[s].push_back(std::move(choice));
            std::size_t i = holes.size();
            bool wrapped = true;
            while (i > 0) {
                --i;
                if (++cursor[i] < sub.options(holes[i]).size()) {
                    wrapped = false;
                    break;
                }
                cursor[i] = 0;
            }
            if (wrapped) {
                break;
            }
        }
    }
    actions[n].push_back(Action{"", Distribution::dirac(fam.initial())});
    out.choices[n].emplace_back();
    out.mdp = Mdp(out.fresh_initial, std::move(actions));
    return out;
}

ConsistencyVerdict scheduler_consistency(const QuotientMdp& quotient, const MemorylessScheduler& sched,
                                         const StateSet& reachable) {
    std::vector<std::map<OptionIndex, std::size_t>> used(quotient.num_holes);
    for (StateIndex s : reachable.members()) {
        std::size_t a = s < sched.choice.size() ? sched.choice[s] : kNoChoice;
        if (a == kNoChoice || a >= quotient.choices[s].size()) {
            throw ModelError("scheduler has no valid choice for reachable state " + std::to_string(s));
        }
        for (const auto& hc : quotient.choices[s][a]) {
            ++used[hc.hole][hc.option];
        }
    }
    Inconsistent conflict;
    Realisation r;
    for (HoleId h = 0; h < quotient.num_holes; ++h) {
        if (used[h].size() > 1) {
            conflict.holes.push_back({h, used[h]});
        }
        r.options.push_back(used[h].empty() ? quotient.subfamily.options(h).front() : used[h].begin()->first);
    }
    if (!conflict.holes.empty()) {
        return conflict;
    }
    return Consistent{std::move(r)};
}

} // namespace chainsynth
