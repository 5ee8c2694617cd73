#include "chainsynth/checker.hpp"
#include "chainsynth/engines/cegar.hpp"
#include "chainsynth/quotient.hpp"

#include "support/fixtures.hpp"
#include "support/oracle.hpp"

#include <gtest/gtest.h>

using namespace chainsynth;
using namespace chainsynth::testing;

namespace {

/// Action of state s in which hole h takes option o.
std::size_t action_with(const QuotientMdp& q, StateIndex s, HoleId h, OptionIndex o) {
    for (std::size_t a = 0; a < q.choices[s].size(); ++a) {
        for (const auto& c : q.choices[s][a]) {
            if (c.hole == h && c.option == o) {
                return a;
            }
        }
    }
    ADD_FAILURE() << "no action with hole " << h << " option " << o << " at state " << s;
    return 0;
}

QuotientMdp first_two_members_quotient(const Family& fam) {
    return quotient_mdp(fam, fam.full_subfamily().restricted(0, {0}));
}

} // namespace

TEST(AllInOne, ShapeOfExampleFamily) {
    Family fam = example_family();
    AllInOneMdp aio = all_in_one_mdp(fam);
    EXPECT_EQ(aio.mdp.num_states(), 21u);
    EXPECT_EQ(aio.mdp.actions(0).size(), 4u);
    ASSERT_EQ(aio.realisations.size(), 4u);
    for (std::size_t r = 0; r < 4; ++r) {
        MarkovChain d = realise(fam, aio.realisations[r]);
        for (StateIndex s = 0; s < 5; ++s) {
            ASSERT_EQ(aio.mdp.actions(aio.state_of(s, r)).size(), 1u);
            std::vector<Transition> shifted;
            for (const auto& e : d.row(s)) {
                shifted.push_back({aio.state_of(e.target, r), e.probability});
            }
            EXPECT_EQ(aio.mdp.actions(aio.state_of(s, r))[0].distribution, Distribution(shifted));
        }
    }
    EXPECT_THROW((void)all_in_one_mdp(fam, 3), ModelError);
}

TEST(AllInOne, SchedulerPickingOneMemberReproducesIt) {
    Family fam = example_family();
    AllInOneMdp aio = all_in_one_mdp(fam);
    MemorylessScheduler sched{std::vector<std::size_t>(aio.mdp.num_states(), 0)};
    MarkovChain induced = induced_chain(aio.mdp, sched);
    StateSet goal(aio.mdp.num_states(), {aio.state_of(4, 0)});
    EXPECT_EQ(oracle_reach(induced, goal)[0], 0.0);
    EXPECT_EQ(aio.realisations[0], r1());
}

TEST(Quotient, ActionsOnlyWhereHolesRemainOpen) {
    Family fam = example_family();
    QuotientMdp q = first_two_members_quotient(fam);
    EXPECT_EQ(q.mdp.num_states(), 6u);
    for (StateIndex s = 0; s < 5; ++s) {
        EXPECT_EQ(q.mdp.actions(s).size(), (s == 2 || s == 3) ? 2u : 1u) << s;
    }
    EXPECT_EQ(q.mdp.actions(q.fresh_initial).size(), 1u);
}

TEST(Quotient, MaxChoosesTheSecondMemberAtStateTwo) {
    Family fam = example_family();
    QuotientMdp q = first_two_members_quotient(fam);
    StateSet goal(q.mdp.num_states(), {4});
    ExtremalResult best = mdp_extremal(q.mdp, goal, OptimizationDirection::Maximize);
    EXPECT_NEAR(best.value, 1.0, 1e-9);
    EXPECT_EQ(best.scheduler.choice[2], action_with(q, 2, 1, 1));

    // Oracle: try both choices at state 2 and keep the better.
    double oracle = 0.0;
    for (OptionIndex o : {0u, 1u}) {
        MemorylessScheduler s{std::vector<std::size_t>(q.mdp.num_states(), 0)};
        s.choice[2] = action_with(q, 2, 1, o);
        s.choice[3] = action_with(q, 3, 1, o);
        oracle = std::max(oracle, oracle_reach(induced_chain(q.mdp, s), goal)[q.fresh_initial]);
    }
    EXPECT_NEAR(best.value, oracle, 1e-9);
}

TEST(Quotient, MixedSchedulerIsInconsistentAndOutsideTheFamily) {
    Family fam = example_family();
    QuotientMdp q = first_two_members_quotient(fam);
    MemorylessScheduler sched{std::vector<std::size_t>(q.mdp.num_states(), 0)};
    sched.choice[2] = action_with(q, 2, 1, 0);
    sched.choice[3] = action_with(q, 3, 1, 1);
    StateSet all(q.mdp.num_states(), {0, 1, 2, 3, 4, q.fresh_initial});
    ConsistencyVerdict v = scheduler_consistency(q, sched, all);
    const auto* bad = std::get_if<Inconsistent>(&v);
    ASSERT_NE(bad, nullptr);
    ASSERT_EQ(bad->holes.size(), 1u);
    EXPECT_EQ(bad->holes[0].hole, 1u);
    EXPECT_EQ(bad->holes[0].frequency.size(), 2u);

    MarkovChain induced = induced_chain(q.mdp, sched);
    for (const Realisation& r : {r1(), r2(), r3(), r4()}) {
        MarkovChain d = realise(fam, r);
        bool same = true;
        for (StateIndex s = 0; s < 5; ++s) {
            same = same && induced.row(s) == d.row(s);
        }
        EXPECT_FALSE(same) << to_string(fam, r);
    }
}

TEST(Quotient, ConsistentSchedulerNamesItsMember) {
    Family fam = example_family();
    QuotientMdp q = first_two_members_quotient(fam);
    MemorylessScheduler sched{std::vector<std::size_t>(q.mdp.num_states(), 0)};
    sched.choice[2] = action_with(q, 2, 1, 1);
    sched.choice[3] = action_with(q, 3, 1, 1);
    StateSet all(q.mdp.num_states(), {0, 1, 2, 3, 4, q.fresh_initial});
    ConsistencyVerdict v = scheduler_consistency(q, sched, all);
    ASSERT_TRUE(std::holds_alternative<Consistent>(v));
    EXPECT_EQ(std::get<Consistent>(v).realisation, r2());
}

TEST(Quotient, BoundsEncloseEveryMember) {
    Family fam = example_family();
    StateSet goal(5, {4});
    QuotientBounds b = quotient_bounds(fam, fam.full_subfamily(), goal);
    for (const Realisation& r : {r1(), r2(), r3(), r4()}) {
        double v = oracle_reach(realise(fam, r), goal)[0];
        EXPECT_LE(b.min.value, v + 1e-9);
        EXPECT_GE(b.max.value, v - 1e-9);
    }
    EXPECT_NEAR(b.max.value, 1.0, 1e-9);
    EXPECT_NEAR(b.min.value, 0.0, 1e-9);
}

TEST(Split, InconsistentThirdHoleSplitsInHalves) {
    Subfamily full = example_family().full_subfamily();
    Inconsistent v{{HoleUsage{1, {{0, 1}, {1, 1}}}}};
    auto [a, b] = split(full, v);
    EXPECT_EQ(a.options(1), std::vector<OptionIndex>{0});
    EXPECT_EQ(b.options(1), std::vector<OptionIndex>{1});
    EXPECT_EQ(a.options(0), full.options(0));
    EXPECT_THROW((void)split(full, Consistent{r1()}), ModelError);
}

TEST(Split, FrequentOptionsGoFirst) {
    Subfamily sub({{0, 1, 2, 3, 4}});
    Inconsistent v{{HoleUsage{0, {{1, 1}, {3, 4}, {4, 2}}}}};
    auto [a, b] = split(sub, v);
    EXPECT_EQ(a.options(0), std::vector<OptionIndex>{3});
    EXPECT_EQ(b.options(0), (std::vector<OptionIndex>{0, 1, 2, 4}));
}

TEST(Split, SplitOffCoversTheRest) {
    Family fam = example_family();
    Subfamily full = fam.full_subfamily();
    auto parts = split_off(full, r2());
    std::uint64_t total = 0;
    for (const auto& p : parts) {
        EXPECT_FALSE(p.contains(r2()));
        total += p.product_size();
    }
    EXPECT_EQ(total, 3u);
}

TEST(FoldConstraints, SingleHoleConjunctsOnly) {
    Family base = example_family();
    Family ok(5, 0, base.holes(), base.rows(), {Formula::negation(Formula::atom(1, 0))});
    auto folded = fold_constraints(ok, ok.full_subfamily());
    ASSERT_TRUE(folded.has_value());
    EXPECT_EQ(folded->options(1), std::vector<OptionIndex>{1});

    Family empty(5, 0, base.holes(), base.rows(),
                 {Formula::negation(Formula::atom(1, 0)), Formula::negation(Formula::atom(1, 1))});
    EXPECT_FALSE(fold_constraints(empty, empty.full_subfamily()).has_value());

    Family coupled(5, 0, base.holes(), base.rows(),
                   {Formula::implication(Formula::atom(0, 0), Formula::atom(1, 1))});
    EXPECT_THROW((void)fold_constraints(coupled, coupled.full_subfamily()), ModelError);
}
