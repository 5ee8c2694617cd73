#include "chainsynth/checker.hpp"
#include "chainsynth/family.hpp"

#include "support/fixtures.hpp"
#include "support/oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace chainsynth;
using namespace chainsynth::testing;

TEST(Distribution, MergesDuplicateTargets) {
    Distribution d({{2, 0.25}, {1, 0.5}, {2, 0.25}});
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d.entries()[0].target, 1u);
    EXPECT_DOUBLE_EQ(d.probability_of(2), 0.5);
}

TEST(Distribution, RejectsBadMass) {
    EXPECT_THROW(Distribution({{0, 0.5}, {1, 0.4}}), ModelError);
    EXPECT_THROW(Distribution({{0, -0.5}, {1, 1.5}}), ModelError);
}

TEST(Compare, ToleranceIsDirectional) {
    EXPECT_TRUE(compare(0.1 - 5e-7, ComparisonOp::GreaterEqual, 0.1, 1e-6));
    EXPECT_FALSE(compare(0.1 + 5e-7, ComparisonOp::Greater, 0.1, 1e-6));
    EXPECT_TRUE(compare(0.4 + 5e-7, ComparisonOp::LessEqual, 0.4, 1e-6));
    EXPECT_FALSE(compare(0.4 - 5e-7, ComparisonOp::Less, 0.4, 1e-6));
}

TEST(Specification, ValidatesGoalAndThreshold) {
    Specification s = spec(3, {1}, ComparisonOp::LessEqual, 0.5);
    EXPECT_NO_THROW(s.validate(3));
    EXPECT_THROW(s.validate(1), ModelError);
    s.threshold = 1.5;
    EXPECT_THROW(s.validate(3), ModelError);
    s.threshold = 0.5;
    s.goal = StateSet(3);
    EXPECT_THROW(s.validate(3), ModelError);
}

TEST(Reach, ExampleValues) {
    Family fam = example_family();
    StateSet goal(5, {4});
    // r1 never reaches 4; r2 and r4 do almost surely.
    auto v1 = reach_probability(realise(fam, r1()), goal);
    auto v2 = reach_probability(realise(fam, r2()), goal);
    EXPECT_EQ(v1[0], 0.0);
    EXPECT_EQ(v2[0], 1.0);
}

TEST(Reach, QualitativeEntriesAreExact) {
    Family fam = example_family();
    StateSet goal(5, {4});
    MarkovChain c = realise(fam, r3());
    StateSet zero = prob0_states(c, goal);
    StateSet one = prob1_states(c, goal);
    auto v = reach_probability(c, goal);
    for (StateIndex s = 0; s < 5; ++s) {
        if (zero.contains(s)) {
            EXPECT_EQ(v[s], 0.0) << s;
        }
        if (one.contains(s)) {
            EXPECT_EQ(v[s], 1.0) << s;
        }
    }
    EXPECT_TRUE(zero.contains(0));
    EXPECT_TRUE(zero.contains(2));
    EXPECT_TRUE(one.contains(4));
}

TEST(Reach, MatchesDenseOracleOnRandomChains) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; ++i) {
        std::size_t n = 2 + rng() % 40;
        MarkovChain c = random_chain(rng, n);
        StateSet goal(n, {static_cast<StateIndex>(rng() % n)});
        auto expect = oracle_reach(c, goal);
        auto direct = reach_probability(c, goal, {SolveMethod::Direct});
        auto iter = reach_probability(c, goal, {SolveMethod::ValueIteration});
        for (StateIndex s = 0; s < n; ++s) {
            ASSERT_NEAR(direct[s], expect[s], 1e-9) << "chain " << i << " state " << s;
            ASSERT_NEAR(iter[s], direct[s], 1e-6) << "chain " << i << " state " << s;
        }
    }
}

TEST(SubMc, CriticalSetZeroOfFirstRealisation) {
    Family fam = example_family();
    StateSet c(5, {0});
    MarkovChain sub = sub_mc(realise(fam, r1()), c);
    EXPECT_EQ(sub.row(0), Distribution({{1, 0.5}, {2, 0.5}}));
    EXPECT_EQ(sub.row(1), Distribution::dirac(1));
    EXPECT_EQ(sub.row(2), Distribution::dirac(2));
    EXPECT_DOUBLE_EQ(reach_probability(sub, StateSet(5, {2}))[0], 0.5);
}

TEST(SubMc, NeverExceedsTheFullChain) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        std::size_t n = 2 + rng() % 25;
        MarkovChain c = random_chain(rng, n);
        StateSet goal(n, {static_cast<StateIndex>(rng() % n)});
        StateSet critical(n);
        critical.insert(c.initial());
        for (StateIndex s = 0; s < n; ++s) {
            if (rng() % 2 == 0) {
                critical.insert(s);
            }
        }
        double full = reach_probability(c, goal)[c.initial()];
        double sub = reach_probability(sub_mc(c, critical), goal)[c.initial()];
        ASSERT_LE(sub, full + 1e-7) << "triple " << i;
    }
}

TEST(Mdp, ExtremalMatchesBestScheduler) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        std::size_t n = 2 + rng() % 6;
        MarkovChain a = random_chain(rng, n);
        MarkovChain b = random_chain(rng, n);
        std::vector<std::vector<Action>> actions(n);
        for (StateIndex s = 0; s < n; ++s) {
            actions[s].push_back({"a", a.row(s)});
            if (s % 2 == 0) {
                actions[s].push_back({"b", b.row(s)});
            }
        }
        Mdp mdp(0, actions);
        StateSet goal(n, {static_cast<StateIndex>(n - 1)});
        double best = 0.0;
        double worst = 1.0;
        std::size_t choosers = (n + 1) / 2;
        for (std::size_t mask = 0; mask < (1u << choosers); ++mask) {
            MemorylessScheduler sched{std::vector<std::size_t>(n, 0)};
            for (std::size_t k = 0; k < choosers; ++k) {
                sched.choice[2 * k] = (mask >> k) & 1u;
            }
            double v = oracle_reach(induced_chain(mdp, sched), goal)[0];
            best = std::max(best, v);
            worst = std::min(worst, v);
        }
        auto hi = mdp_extremal(mdp, goal, OptimizationDirection::Maximize);
        auto lo = mdp_extremal(mdp, goal, OptimizationDirection::Minimize);
        ASSERT_NEAR(hi.value, best, 1e-6) << i;
        ASSERT_NEAR(lo.value, worst, 1e-6) << i;
        ASSERT_NEAR(oracle_reach(induced_chain(mdp, hi.scheduler), goal)[0], best, 1e-6) << i;
        ASSERT_NEAR(oracle_reach(induced_chain(mdp, lo.scheduler), goal)[0], worst, 1e-6) << i;
    }
}
