#include "chainsynth/engines/random_family.hpp"

#include "chainsynth/checker.hpp"

#include <algorithm>
#include <random>

namespace chainsynth {

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

} // namespace

RandomInstance random_instance(std::uint64_t seed, const RandomFamilyParams& params) {
    std::mt19937_64 rng(seed);
    std::size_t n = pick(rng, std::max<std::size_t>(params.min_states, 1), std::max(params.min_states, params.max_states));

    std::vector<Hole> holes;
    std::uint64_t product = 1;
    std::size_t num_holes = pick(rng, 0, params.max_holes);
    for (std::size_t h = 0; h < num_holes; ++h) {
        std::size_t k = pick(rng, 2, std::max<std::size_t>(2, params.max_options));
        while (k > 1 && product * k > params.max_realisations) {
            --k;
        }
        if (k < 2) {
            break;
        }
        product *= k;
        Hole hole;
        hole.name = "h" + std::to_string(h);
        for (std::size_t o = 0; o < k; ++o) {
            hole.options.push_back("o" + std::to_string(o));
            hole.costs.push_back(pick(rng, 0, params.max_cost));
        }
        holes.push_back(std::move(hole));
    }

    auto random_state = [&] { return static_cast<StateIndex>(pick(rng, 0, n - 1)); };
    std::vector<std::vector<Branch>> rows(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t b = pick(rng, 1, std::max<std::size_t>(1, params.max_branches));
        std::vector<double> weights;
        double total = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
            weights.push_back(static_cast<double>(pick(rng, 1, 4)));
            total += weights.back();
        }
        for (std::size_t i = 0; i < b; ++i) {
            Branch branch{weights[i] / total, FixedTarget{random_state()}};
            if (!holes.empty() && coin(rng, params.hole_branch_probability)) {
                HoleTarget t;
                t.holes.push_back(pick(rng, 0, holes.size() - 1));
                if (holes.size() > 1 && coin(rng, params.two_hole_probability)) {
                    HoleId other = pick(rng, 0, holes.size() - 1);
                    if (other != t.holes.front()) {
                        t.holes.push_back(other);
                        std::sort(t.holes.begin(), t.holes.end());
                    }
                }
                std::size_t size = 1;
                for (HoleId h : t.holes) {
                    size *= holes[h].options.size();
                }
                for (std::size_t j = 0; j < size; ++j) {
                    t.table.push_back(random_state());
                }
                branch.target = std::move(t);
            }
            rows[s].push_back(std::move(branch));
        }
    }

    std::vector<Formula> constraints;
    for (std::size_t c = 0; c < params.constraints && !holes.empty(); ++c) {
        HoleId h = pick(rng, 0, holes.size() - 1);
        OptionIndex o = pick(rng, 0, holes[h].options.size() - 1);
        if (params.decomposable_constraints || holes.size() < 2) {
            OptionIndex o2 = pick(rng, 0, holes[h].options.size() - 1);
            constraints.push_back(coin(rng, 0.5) ? Formula::negation(Formula::atom(h, o))
                                                 : Formula::disjunction({Formula::atom(h, o), Formula::atom(h, o2)}));
        } else {
            HoleId h2 = (h + 1 + pick(rng, 0, holes.size() - 2)) % holes.size();
            OptionIndex o2 = pick(rng, 0, holes[h2].options.size() - 1);
            constraints.push_back(
                Formula::implication(Formula::atom(h, o), Formula::negation(Formula::atom(h2, o2))));
        }
    }

    RandomInstance out{Family(n, 0, std::move(holes), std::move(rows), std::move(constraints)), {}};
    StateSet goal(n);
    goal.insert(random_state());
    if (n > 2 && coin(rng, 0.3)) {
        goal.insert(random_state());
    }
    static constexpr ComparisonOp ops[] = {ComparisonOp::Less, ComparisonOp::LessEqual, ComparisonOp::GreaterEqual,
                                           ComparisonOp::Greater};
    out.spec.goal = goal;
    out.spec.op = ops[pick(rng, 0, 3)];

    // Anchor the threshold near a random member's value.
    Realisation r;
    for (const auto& h : out.family.holes()) {
        r.options.push_back(pick(rng, 0, h.options.size() - 1));
    }
    double anchor = 0.5;
    if (out.family.satisfies_constraints(r)) {
        MarkovChain chain = realise(out.family, r);
        anchor = reach_probability(chain, goal)[chain.initial()];
    }
    double offset = std::uniform_real_distribution<double>(-0.15, 0.15)(rng);
    out.spec.threshold = std::clamp(anchor + offset, 0.01, 0.99);
    return out;
}

RandomInstance pruning_instance(std::size_t outer, std::size_t inner) {
    if (outer < 1) {
        throw ModelError("the pruning instance needs at least one outer option");
    }
    constexpr StateIndex kInit = 0;
    constexpr StateIndex kMiddle = 1;
    constexpr StateIndex kUnsafe = 2;
    constexpr StateIndex kSafe = 3;
    auto make_hole = [](const std::string& name, std::size_t k) {
        Hole h;
        h.name = name;
        for (std::size_t o = 0; o < k; ++o) {
            h.options.push_back("o" + std::to_string(o));
            h.costs.push_back(0);
        }
        return h;
    };
    std::vector<Hole> holes{make_hole("outer", outer)};
    std::vector<std::vector<Branch>> rows(4);
    HoleTarget first{{0}, std::vector<StateIndex>(outer, kUnsafe)};
    first.table.back() = inner > 0 ? kMiddle : kSafe;
    rows[kInit] = {{0.9, first}, {0.1, FixedTarget{kSafe}}};
    if (inner > 0) {
        holes.push_back(make_hole("inner", inner));
        HoleTarget second{{1}, std::vector<StateIndex>(inner, kUnsafe)};
        second.table.back() = kSafe;
        rows[kMiddle] = {{0.9, second}, {0.1, FixedTarget{kSafe}}};
    } else {
        rows[kMiddle] = {{1.0, FixedTarget{kSafe}}};
    }
    rows[kUnsafe] = {{1.0, FixedTarget{kUnsafe}}};
    rows[kSafe] = {{1.0, FixedTarget{kSafe}}};
    RandomInstance out{Family(4, kInit, std::move(holes), std::move(rows)), {}};
    out.spec.goal = StateSet(4, {kUnsafe});
    out.spec.op = ComparisonOp::LessEqual;
    out.spec.threshold = 0.5;
    return out;
}

} // namespace chainsynth
