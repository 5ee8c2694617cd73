#include "chainsynth/checker.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <utility>

namespace chainsynth {

namespace {

struct Choice {
    StateIndex state;
    std::size_t action;
};

using ChoicePredecessors = std::vector<std::vector<Choice>>;

ChoicePredecessors choice_predecessors(const Mdp& mdp) {
    ChoicePredecessors pred(mdp.num_states());
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        const auto& acts = mdp.actions(static_cast<StateIndex>(s));
        for (std::size_t a = 0; a < acts.size(); ++a) {
            for (const auto& e : acts[a].distribution) {
                pred[e.target].push_back({static_cast<StateIndex>(s), a});
            }
        }
    }
    return pred;
}

bool all_successors_in(const Distribution& d, const StateSet& set) {
    return std::all_of(d.begin(), d.end(), [&](const Transition& t) { return set.contains(t.target); });
}

bool some_successor_in(const Distribution& d, const StateSet& set) {
    return std::any_of(d.begin(), d.end(), [&](const Transition& t) { return set.contains(t.target); });
}

/// States from which some scheduler reaches `goal` with positive probability.
StateSet exists_reach(const ChoicePredecessors& pred, const StateSet& goal) {
    StateSet seen = goal;
    std::deque<StateIndex> queue;
    for (StateIndex s : goal.members()) {
        queue.push_back(s);
    }
    while (!queue.empty()) {
        StateIndex t = queue.front();
        queue.pop_front();
        for (const auto& c : pred[t]) {
            if (!seen.contains(c.state)) {
                seen.insert(c.state);
                queue.push_back(c.state);
            }
        }
    }
    return seen;
}

/// States from which every scheduler reaches `goal` with positive probability.
StateSet forall_reach(const Mdp& mdp, const StateSet& goal) {
    StateSet forced = goal;
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t s = 0; s < mdp.num_states(); ++s) {
            auto si = static_cast<StateIndex>(s);
            if (forced.contains(si)) {
                continue;
            }
            const auto& acts = mdp.actions(si);
            if (std::all_of(acts.begin(), acts.end(),
                            [&](const Action& a) { return some_successor_in(a.distribution, forced); })) {
                forced.insert(si);
                changed = true;
            }
        }
    }
    return forced;
}

/// Greatest set from which some scheduler reaches `goal` almost surely.
StateSet prob1_exists(const Mdp& mdp, const StateSet& goal) {
    const std::size_t n = mdp.num_states();
    StateSet candidates(n);
    for (std::size_t s = 0; s < n; ++s) {
        candidates.insert(static_cast<StateIndex>(s));
    }
    while (true) {
        StateSet attractor = goal;
        bool grew = true;
        while (grew) {
            grew = false;
            for (std::size_t s = 0; s < n; ++s) {
                auto si = static_cast<StateIndex>(s);
                if (attractor.contains(si) || !candidates.contains(si)) {
                    continue;
                }
                for (const auto& a : mdp.actions(si)) {
                    if (all_successors_in(a.distribution, candidates) && some_successor_in(a.distribution, attractor)) {
                        attractor.insert(si);
                        grew = true;
                        break;
                    }
                }
            }
        }
        if (attractor == candidates) {
            return candidates;
        }
        candidates = attractor;
    }
}

/// Layered attractor towards `target`: every state of `region` outside
/// `target` gets an action that stays within `stay` and moves one layer closer.
void attractor_choices(const Mdp& mdp, const StateSet& target, const StateSet& region, const StateSet& stay,
                       MemorylessScheduler& sched) {
    StateSet done = target;
    bool grew = true;
    while (grew) {
        grew = false;
        StateSet layer = done;
        for (std::size_t s = 0; s < mdp.num_states(); ++s) {
            auto si = static_cast<StateIndex>(s);
            if (done.contains(si) || !region.contains(si)) {
                continue;
            }
            const auto& acts = mdp.actions(si);
            for (std::size_t a = 0; a < acts.size(); ++a) {
                if (all_successors_in(acts[a].distribution, stay) && some_successor_in(acts[a].distribution, done)) {
                    sched.choice[s] = a;
                    layer.insert(si);
                    grew = true;
                    break;
                }
            }
        }
        done = layer;
    }
}

double q_value(const Distribution& d, const std::vector<double>& x) {
    double v = 0.0;
    for (const auto& e : d) {
        v += e.probability * x[e.target];
    }
    return v;
}

} // namespace

ExtremalResult mdp_extremal(const Mdp& mdp, const StateSet& goal, OptimizationDirection dir,
                            const SolverOptions& options) {
    const std::size_t n = mdp.num_states();
    if (goal.universe() != n) {
        throw ModelError("goal set does not match the MDP's state space");
    }
    const bool maximize = dir == OptimizationDirection::Maximize;
    auto pred = choice_predecessors(mdp);

    StateSet everyone(n);
    for (std::size_t s = 0; s < n; ++s) {
        everyone.insert(static_cast<StateIndex>(s));
    }

    // Qualitative part: fixed-value states and schedulers realising them.
    StateSet zero(n);
    StateSet one(n);
    MemorylessScheduler sched{std::vector<std::size_t>(n, 0)};
    if (maximize) {
        StateSet positive = exists_reach(pred, goal);
        for (std::size_t s = 0; s < n; ++s) {
            if (!positive.contains(static_cast<StateIndex>(s))) {
                zero.insert(static_cast<StateIndex>(s));
            }
        }
        one = prob1_exists(mdp, goal);
        attractor_choices(mdp, goal, one, one, sched);
        attractor_choices(mdp, one, positive, everyone, sched);
    } else {
        StateSet forced = forall_reach(mdp, goal);
        for (std::size_t s = 0; s < n; ++s) {
            auto si = static_cast<StateIndex>(s);
            if (forced.contains(si)) {
                continue;
            }
            zero.insert(si);
            const auto& acts = mdp.actions(si);
            for (std::size_t a = 0; a < acts.size(); ++a) {
                if (!some_successor_in(acts[a].distribution, forced)) {
                    sched.choice[s] = a;
                    break;
                }
            }
        }
        // Prob-1 under all schedulers: cannot slip into `zero` before the goal.
        StateSet escape = zero;
        std::deque<StateIndex> queue;
        for (StateIndex s : zero.members()) {
            queue.push_back(s);
        }
        while (!queue.empty()) {
            StateIndex t = queue.front();
            queue.pop_front();
            for (const auto& c : pred[t]) {
                if (!escape.contains(c.state) && !goal.contains(c.state)) {
                    escape.insert(c.state);
                    queue.push_back(c.state);
                }
            }
        }
        for (std::size_t s = 0; s < n; ++s) {
            if (!escape.contains(static_cast<StateIndex>(s))) {
                one.insert(static_cast<StateIndex>(s));
            }
        }
    }

    std::vector<StateIndex> maybe;
    for (std::size_t s = 0; s < n; ++s) {
        auto si = static_cast<StateIndex>(s);
        if (!zero.contains(si) && !one.contains(si)) {
            maybe.push_back(si);
        }
    }

    auto better = [maximize](double candidate, double incumbent, double eps) {
        return maximize ? candidate > incumbent + eps : candidate < incumbent - eps;
    };

    if (!maybe.empty()) {
        // Value iteration warm start; its greedy scheduler seeds policy iteration.
        std::vector<double> x(n, 0.0);
        for (StateIndex s : one.members()) {
            x[s] = 1.0;
        }
        const std::size_t warm_sweeps = std::min<std::size_t>(options.vi_max_sweeps, 10000);
        for (std::size_t sweep = 0; sweep < warm_sweeps; ++sweep) {
            double delta = 0.0;
            for (StateIndex s : maybe) {
                const auto& acts = mdp.actions(s);
                double best = q_value(acts[0].distribution, x);
                for (std::size_t a = 1; a < acts.size(); ++a) {
                    double q = q_value(acts[a].distribution, x);
                    best = maximize ? std::max(best, q) : std::min(best, q);
                }
                delta = std::max(delta, std::abs(best - x[s]));
                x[s] = best;
            }
            if (delta < options.vi_tolerance) {
                break;
            }
        }
        if (maximize) {
            // Greedy near-optimal actions, layered so that every positive state
            // keeps a path to the goal; leftovers keep their attractor choice.
            StateSet done = one;
            bool grew = true;
            while (grew) {
                grew = false;
                StateSet layer = done;
                for (StateIndex s : maybe) {
                    if (done.contains(s)) {
                        continue;
                    }
                    const auto& acts = mdp.actions(s);
                    double best = 0.0;
                    for (const auto& a : acts) {
                        best = std::max(best, q_value(a.distribution, x));
                    }
                    for (std::size_t a = 0; a < acts.size(); ++a) {
                        if (q_value(acts[a].distribution, x) >= best - 1e-9 &&
                            some_successor_in(acts[a].distribution, done)) {
                            sched.choice[s] = a;
                            layer.insert(s);
                            grew = true;
                            break;
                        }
                    }
                }
                done = layer;
            }
        } else {
            for (StateIndex s : maybe) {
                const auto& acts = mdp.actions(s);
                std::size_t best_a = 0;
                double best = q_value(acts[0].distribution, x);
                for (std::size_t a = 1; a < acts.size(); ++a) {
                    double q = q_value(acts[a].distribution, x);
                    if (q < best - 1e-12) {
                        best = q;
                        best_a = a;
                    }
                }
                sched.choice[s] = best_a;
            }
        }
    }

    // Policy iteration with exact evaluation; only strict improvements switch,
    // which preserves reachability of the goal from every positive state.
    const bool iterative_eval = options.method == SolveMethod::ValueIteration ||
                                (options.method == SolveMethod::Automatic && n > options.direct_limit);
    const double eps = iterative_eval ? std::max(1e-12, 10.0 * options.vi_tolerance) : 1e-12;
    std::vector<double> values;
    for (std::size_t round = 0;; ++round) {
        MarkovChain chain = induced_chain(mdp, sched);
        values = reach_probability(chain, goal, options);
        if (maybe.empty() || round >= 10000) {
            break;
        }
        bool switched = false;
        for (StateIndex s : maybe) {
            const auto& acts = mdp.actions(s);
            std::size_t best_a = sched.choice[s];
            double best = values[s];
            for (std::size_t a = 0; a < acts.size(); ++a) {
                double q = q_value(acts[a].distribution, values);
                if (better(q, best, eps)) {
                    best = q;
                    best_a = a;
                }
            }
            if (best_a != sched.choice[s]) {
                sched.choice[s] = best_a;
                switched = true;
            }
        }
        if (!switched) {
            break;
        }
    }
    double at_init = values[mdp.initial()];
    return {at_init, std::move(values), std::move(sched)};
}

} // namespace chainsynth
