#include "chainsynth/checker.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <deque>

namespace chainsynth {

namespace {

std::vector<std::vector<StateIndex>> predecessors(const MarkovChain& chain) {
    std::vector<std::vector<StateIndex>> pred(chain.num_states());
    for (std::size_t s = 0; s < chain.num_states(); ++s) {
        for (const auto& e : chain.row(static_cast<StateIndex>(s))) {
            pred[e.target].push_back(static_cast<StateIndex>(s));
        }
    }
    return pred;
}

void check_goal(const StateSet& goal, std::size_t n) {
    if (goal.universe() != n) {
        throw ModelError("goal set is defined over " + std::to_string(goal.universe()) +
                         " states but the model has " + std::to_string(n));
    }
}

/// Backward closure of `seed` through predecessors, never expanding states in
/// `blocked`.
StateSet backward_closure(const std::vector<std::vector<StateIndex>>& pred, const StateSet& seed,
                          const StateSet* blocked) {
    StateSet seen = seed;
    std::deque<StateIndex> queue;
    for (StateIndex s : seed.members()) {
        queue.push_back(s);
    }
    while (!queue.empty()) {
        StateIndex t = queue.front();
        queue.pop_front();
        for (StateIndex p : pred[t]) {
            if (seen.contains(p) || (blocked != nullptr && blocked->contains(p))) {
                continue;
            }
            seen.insert(p);
            queue.push_back(p);
        }
    }
    return seen;
}

StateSet complement(const StateSet& set) {
    StateSet out(set.universe());
    for (std::size_t s = 0; s < set.universe(); ++s) {
        if (!set.contains(static_cast<StateIndex>(s))) {
            out.insert(static_cast<StateIndex>(s));
        }
    }
    return out;
}

/// Solves x_s = sum_{t in maybe} P(s,t) x_t + b_s for s in maybe.
std::vector<double> solve_direct(const std::vector<StateIndex>& maybe, const std::vector<std::size_t>& local,
                                 const MarkovChain& chain, const std::vector<double>& known) {
    const auto m = static_cast<Eigen::Index>(maybe.size());
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        triplets.emplace_back(i, i, 1.0);
        for (const auto& e : chain.row(maybe[static_cast<std::size_t>(i)])) {
            std::size_t j = local[e.target];
            if (j != kNoChoice) {
                triplets.emplace_back(i, static_cast<Eigen::Index>(j), -e.probability);
            } else {
                rhs[i] += e.probability * known[e.target];
            }
        }
    }
    Eigen::SparseMatrix<double> a(m, m);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
        throw ModelError("linear system for reachability is singular");
    }
    Eigen::VectorXd x = lu.solve(rhs);
    return {x.data(), x.data() + x.size()};
}

std::vector<double> solve_iterative(const std::vector<StateIndex>& maybe, const std::vector<std::size_t>& local,
                                    const MarkovChain& chain, const std::vector<double>& known,
                                    const SolverOptions& options) {
    std::vector<double> x(maybe.size(), 0.0);
    std::vector<double> b(maybe.size(), 0.0);
    for (std::size_t i = 0; i < maybe.size(); ++i) {
        for (const auto& e : chain.row(maybe[i])) {
            if (local[e.target] == kNoChoice) {
                b[i] += e.probability * known[e.target];
            }
        }
    }
    for (std::size_t sweep = 0; sweep < options.vi_max_sweeps; ++sweep) {
        double delta = 0.0;
        for (std::size_t i = 0; i < maybe.size(); ++i) {
            double v = b[i];
            for (const auto& e : chain.row(maybe[i])) {
                std::size_t j = local[e.target];
                if (j != kNoChoice) {
                    v += e.probability * x[j];
                }
            }
            delta = std::max(delta, std::abs(v - x[i]));
            x[i] = v;
        }
        if (delta < options.vi_tolerance) {
            break;
        }
    }
    return x;
}

} // namespace

StateSet prob0_states(const MarkovChain& chain, const StateSet& goal) {
    check_goal(goal, chain.num_states());
    return complement(backward_closure(predecessors(chain), goal, nullptr));
}

StateSet prob1_states(const MarkovChain& chain, const StateSet& goal) {
    check_goal(goal, chain.num_states());
    auto pred = predecessors(chain);
    StateSet zero = complement(backward_closure(pred, goal, nullptr));
    // Anything that can slip into a prob-0 state before touching the goal
    // misses it with positive probability.
    return complement(backward_closure(pred, zero, &goal));
}

StateSet reachable_states(const MarkovChain& chain, StateIndex from) {
    StateSet seen(chain.num_states());
    seen.insert(from);
    std::deque<StateIndex> queue{from};
    while (!queue.empty()) {
        StateIndex s = queue.front();
        queue.pop_front();
        for (const auto& e : chain.row(s)) {
            if (!seen.contains(e.target)) {
                seen.insert(e.target);
                queue.push_back(e.target);
            }
        }
    }
    return seen;
}

StateSet reachable_states(const Mdp& mdp, StateIndex from, const MemorylessScheduler& sched) {
    StateSet seen(mdp.num_states());
    seen.insert(from);
    std::deque<StateIndex> queue{from};
    while (!queue.empty()) {
        StateIndex s = queue.front();
        queue.pop_front();
        std::size_t a = s < sched.choice.size() ? sched.choice[s] : kNoChoice;
        if (a == kNoChoice || a >= mdp.actions(s).size()) {
            throw ModelError("scheduler has no valid choice for reachable state " + std::to_string(s));
        }
        for (const auto& e : mdp.actions(s)[a].distribution) {
            if (!seen.contains(e.target)) {
                seen.insert(e.target);
                queue.push_back(e.target);
            }
        }
    }
    return seen;
}

std::vector<double> reach_probability(const MarkovChain& chain, const StateSet& goal, const SolverOptions& options) {
    check_goal(goal, chain.num_states());
    const std::size_t n = chain.num_states();
    auto pred = predecessors(chain);
    StateSet can_reach = backward_closure(pred, goal, nullptr);
    StateSet zero = complement(can_reach);
    StateSet one = complement(backward_closure(pred, zero, &goal));

    std::vector<double> x(n, 0.0);
    std::vector<StateIndex> maybe;
    std::vector<std::size_t> local(n, kNoChoice);
    for (std::size_t s = 0; s < n; ++s) {
        auto si = static_cast<StateIndex>(s);
        if (one.contains(si)) {
            x[s] = 1.0;
        } else if (!zero.contains(si)) {
            local[s] = maybe.size();
            maybe.push_back(si);
        }
    }
    if (maybe.empty()) {
        return x;
    }
    bool direct = options.method == SolveMethod::Direct ||
                  (options.method == SolveMethod::Automatic && maybe.size() <= options.direct_limit);
    std::vector<double> sol = direct ? solve_direct(maybe, local, chain, x)
                                     : solve_iterative(maybe, local, chain, x, options);
    for (std::size_t i = 0; i < maybe.size(); ++i) {
        x[maybe[i]] = std::clamp(sol[i], 0.0, 1.0);
    }
    return x;
}

CheckResult check(const MarkovChain& chain, const Specification& spec, const SolverOptions& options) {
    spec.validate(chain.num_states());
    double value = reach_probability(chain, spec.goal, options)[chain.initial()];
    return {compare(value, spec.op, spec.threshold, spec.tolerance), value};
}

MarkovChain induced_chain(const Mdp& mdp, const MemorylessScheduler& sched) {
    StateSet reach = reachable_states(mdp, mdp.initial(), sched);
    std::vector<Distribution> rows;
    rows.reserve(mdp.num_states());
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        auto si = static_cast<StateIndex>(s);
        std::size_t a = s < sched.choice.size() ? sched.choice[s] : kNoChoice;
        if (a == kNoChoice || a >= mdp.actions(si).size()) {
            if (reach.contains(si)) {
                throw ModelError("scheduler has no valid choice for reachable state " + std::to_string(s));
            }
            a = 0;
        }
        rows.push_back(mdp.actions(si)[a].distribution);
    }
    return MarkovChain(mdp.initial(), std::move(rows));
}

MarkovChain sub_mc(const MarkovChain& chain, const StateSet& critical) {
    if (critical.universe() != chain.num_states()) {
        throw ModelError("critical set does not match the chain's state space");
    }
    if (!critical.contains(chain.initial())) {
        throw ModelError("critical set must contain the initial state");
    }
    std::vector<Distribution> rows;
    rows.reserve(chain.num_states());
    for (std::size_t s = 0; s < chain.num_states(); ++s) {
        auto si = static_cast<StateIndex>(s);
        rows.push_back(critical.contains(si) ? chain.row(si) : Distribution::dirac(si));
    }
    return MarkovChain(chain.initial(), std::move(rows));
}

} // namespace chainsynth
