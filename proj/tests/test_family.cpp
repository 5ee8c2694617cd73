#include "chainsynth/checker.hpp"
#include "chainsynth/engines/random_family.hpp"
#include "chainsynth/family.hpp"
#include "chainsynth/family_json.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

using namespace chainsynth;
using namespace chainsynth::testing;

TEST(Family, RealiseFirstMember) {
    MarkovChain c = realise(example_family(), r1());
    EXPECT_EQ(c.row(0), Distribution({{1, 0.5}, {2, 0.5}}));
    EXPECT_EQ(c.row(2), Distribution::dirac(2));
    EXPECT_EQ(c.row(3), Distribution({{2, 0.8}, {3, 0.2}}));
}

TEST(Family, LastMemberCannotReachStateTwo) {
    MarkovChain c = realise(example_family(), r4());
    EXPECT_FALSE(reachable_states(c, 0).contains(2));
    EXPECT_EQ(c.num_states(), 5u);
}

TEST(Family, StructuralCosts) {
    Family fam = example_family();
    EXPECT_EQ(cost(fam, r1()), 8u);
    EXPECT_EQ(cost(fam, r2()), 10u);
    EXPECT_EQ(cost(fam, r3()), 11u);
    EXPECT_EQ(cost(fam, r4()), 11u);
}

TEST(Family, OptionSumCosts) {
    std::vector<Hole> holes{{"a", {"x", "y"}, {1, 4}}, {"b", {"u", "v", "w"}, {0, 2, 7}}};
    std::vector<std::vector<Branch>> rows{{{1.0, HoleTarget{{0}, {0, 1}}}}, {{1.0, HoleTarget{{1}, {0, 1, 1}}}}};
    Family fam(2, 0, holes, rows);
    EXPECT_EQ(cost(fam, {{1, 2}}), 11u);
    EXPECT_EQ(cost(fam, {{0, 0}}), 1u);
}

TEST(Family, EnumerationIsLexicographicAndRespectsConstraints) {
    Family base = example_family();
    Family fam(5, 0, base.holes(), base.rows(),
               {Formula::implication(Formula::atom(0, 0), Formula::negation(Formula::atom(1, 0)))});
    auto all = enumerate_realisations(fam, fam.full_subfamily());
    ASSERT_EQ(all.size(), 3u);
    EXPECT_EQ(all[0], r2());
    EXPECT_EQ(all[1], r3());
    EXPECT_EQ(all[2], r4());
    EXPECT_THROW((void)realise(fam, r1()), ModelError);
}

TEST(Family, RejectsMalformedTables) {
    std::vector<Hole> holes{{"h", {"a", "b"}, {0, 0}}};
    EXPECT_THROW(Family(2, 0, holes, {{{1.0, HoleTarget{{0}, {0}}}}, {{1.0, FixedTarget{1}}}}), ModelError);
    EXPECT_THROW(Family(2, 0, holes, {{{1.0, HoleTarget{{0}, {0, 5}}}}, {{1.0, FixedTarget{1}}}}), ModelError);
    EXPECT_THROW(Family(2, 0, holes, {{{0.5, FixedTarget{0}}}, {{1.0, FixedTarget{1}}}}), ModelError);
}

TEST(Family, AssignmentParsing) {
    Family fam = example_family();
    EXPECT_EQ(parse_assignment(fam, "k2=3,k3=4"), r4());
    EXPECT_EQ(to_string(fam, r2()), "k2=2,k3=4");
    EXPECT_THROW((void)parse_assignment(fam, "k2=2"), ModelError);
    EXPECT_THROW((void)parse_assignment(fam, "k2=2,k3=7"), ModelError);
    EXPECT_THROW((void)parse_assignment(fam, "k2=2,k2=3,k3=2"), ModelError);
}

TEST(Family, SubfamilyRestriction) {
    Subfamily full = example_family().full_subfamily();
    EXPECT_EQ(full.product_size(), 4u);
    Subfamily pinned = full.restricted(1, {0});
    EXPECT_EQ(pinned.product_size(), 2u);
    EXPECT_TRUE(pinned.contains(r3()));
    EXPECT_FALSE(pinned.contains(r4()));
}

TEST(FamilyJson, RoundTripIsExact) {
    Family base = example_family();
    Family fam(5, 0, base.holes(), base.rows(),
               {Formula::disjunction({Formula::atom(0, 1), Formula::negation(Formula::atom(1, 0))})},
               CostModel::Structural);
    std::string text = family_to_json(fam);
    Family back = family_from_json(text);
    EXPECT_EQ(back, fam);
    EXPECT_EQ(family_to_json(back), text);
}

TEST(FamilyJson, RandomFamiliesRoundTrip) {
    RandomFamilyParams p;
    p.constraints = 2;
    p.decomposable_constraints = false;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Family fam = random_instance(seed, p).family;
        std::string text = family_to_json(fam);
        Family back = family_from_json(text);
        ASSERT_EQ(back, fam) << seed;
        ASSERT_EQ(family_to_json(back), text) << seed;
    }
}

TEST(FamilyJson, ReportsErrors) {
    EXPECT_THROW((void)family_from_json("{"), ModelError);
    EXPECT_THROW((void)family_from_json(R"({"states": 1, "init": 3, "holes": [], "transitions": []})"), ModelError);
    EXPECT_THROW((void)parse_constraint(example_family().holes(), "(= k9 \"2\")"), ModelError);
}
