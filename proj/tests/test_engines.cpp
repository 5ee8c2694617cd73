#include "chainsynth/engines/cegar.hpp"
#include "chainsynth/engines/cegis.hpp"
#include "chainsynth/engines/enumeration.hpp"
#include "chainsynth/engines/random_family.hpp"
#include "chainsynth/engines/synthesis.hpp"

#include "support/fixtures.hpp"
#include "support/oracle.hpp"

#include <gtest/gtest.h>

using namespace chainsynth;
using namespace chainsynth::testing;

namespace {

SynthesisQuery query(QueryKind kind, std::vector<StateIndex> goal, ComparisonOp op = ComparisonOp::GreaterEqual,
                     double threshold = 0.0) {
    SynthesisQuery q;
    q.kind = kind;
    q.spec = spec(5, std::move(goal), op, threshold);
    return q;
}

std::string engine_name(const ::testing::TestParamInfo<EngineKind>& info) { return to_string(info.param); }

class AllEngines : public ::testing::TestWithParam<EngineKind> {};

} // namespace

TEST_P(AllEngines, PartitionOfTheExample) {
    auto out = solve(GetParam(), example_family(), query(QueryKind::Partition, {4}, ComparisonOp::GreaterEqual, 0.1));
    ASSERT_EQ(out.kind, OutcomeKind::Partition);
    EXPECT_EQ(out.satisfying, (std::vector<Realisation>{r2(), r4()}));
    EXPECT_EQ(out.violating, (std::vector<Realisation>{r1(), r3()}));
}

TEST_P(AllEngines, MaxReachesOne) {
    auto out = solve(GetParam(), example_family(), query(QueryKind::Max, {4}));
    ASSERT_EQ(out.kind, OutcomeKind::Optimum);
    EXPECT_NEAR(*out.value, 1.0, 1e-6);
    EXPECT_TRUE(*out.witness == r2() || *out.witness == r4());
}

TEST_P(AllEngines, MinReachesZero) {
    auto out = solve(GetParam(), example_family(), query(QueryKind::Min, {4}));
    ASSERT_EQ(out.kind, OutcomeKind::Optimum);
    EXPECT_NEAR(*out.value, 0.0, 1e-6);
    EXPECT_TRUE(*out.witness == r1() || *out.witness == r3());
}

TEST_P(AllEngines, BudgetedMax) {
    Family fam = example_family();
    auto q = query(QueryKind::Max, {4});
    q.budget = 10;
    auto out = solve(GetParam(), fam, q);
    ASSERT_EQ(out.kind, OutcomeKind::Optimum);
    EXPECT_EQ(*out.witness, r2());
    EXPECT_EQ(*out.cost, 10u);
    q.budget = 9;
    out = solve(GetParam(), fam, q);
    ASSERT_EQ(out.kind, OutcomeKind::Optimum);
    EXPECT_EQ(*out.witness, r1());
    EXPECT_NEAR(*out.value, 0.0, 1e-9);
    q.budget = 7;
    EXPECT_EQ(solve(GetParam(), fam, q).kind, OutcomeKind::Unsatisfiable);
}

TEST_P(AllEngines, BudgetFoldsIntoPartition) {
    auto q = query(QueryKind::Partition, {4}, ComparisonOp::GreaterEqual, 0.1);
    q.budget = 10;
    auto out = solve(GetParam(), example_family(), q);
    EXPECT_EQ(out.satisfying, std::vector<Realisation>{r2()});
    EXPECT_EQ(out.violating, (std::vector<Realisation>{r1(), r3(), r4()}));
}

TEST_P(AllEngines, FeasibilityAndUnsatisfiability) {
    Family fam = example_family();
    auto q = query(QueryKind::Feasibility, {4}, ComparisonOp::GreaterEqual, 0.1);
    auto out = solve(GetParam(), fam, q);
    ASSERT_EQ(out.kind, OutcomeKind::Witness);
    EXPECT_GE(realisation_value(fam, *out.witness, q.spec.goal), 0.1);
    q.scope = fam.full_subfamily().restricted(1, {0});
    EXPECT_EQ(solve(GetParam(), fam, q).kind, OutcomeKind::Unsatisfiable);
}

TEST_P(AllEngines, EpsilonOptimal) {
    Family fam = example_family();
    auto q = query(QueryKind::EpsOptimal, {2});
    q.epsilon = 0.25;
    auto out = solve(GetParam(), fam, q);
    ASSERT_EQ(out.kind, OutcomeKind::Optimum);
    EXPECT_GE(realisation_value(fam, *out.witness, q.spec.goal), 0.75 - 1e-9);
}

TEST_P(AllEngines, CostOptimalPartitionWitness) {
    auto q = query(QueryKind::Feasibility, {4}, ComparisonOp::GreaterEqual, 0.1);
    q.cost_optimal = true;
    auto out = solve(GetParam(), example_family(), q);
    ASSERT_EQ(out.kind, OutcomeKind::Witness);
    EXPECT_EQ(*out.witness, r2());
    EXPECT_EQ(*out.cost, 10u);
}

TEST_P(AllEngines, ZeroHoleFamily) {
    Family fam(2, 0, {}, {{{0.3, FixedTarget{1}}, {0.7, FixedTarget{0}}}, {{1.0, FixedTarget{1}}}});
    SynthesisQuery q;
    q.spec = spec(2, {1}, ComparisonOp::GreaterEqual, 0.9);
    auto out = solve(GetParam(), fam, q);
    ASSERT_EQ(out.kind, OutcomeKind::Witness);
    EXPECT_TRUE(out.witness->options.empty());
    q.spec.op = ComparisonOp::Less;
    EXPECT_EQ(solve(GetParam(), fam, q).kind, OutcomeKind::Unsatisfiable);
}

TEST_P(AllEngines, AgreesWithEnumerationOnPruningInstance) {
    RandomInstance inst = pruning_instance(12, 9);
    SynthesisQuery q;
    q.kind = QueryKind::Partition;
    q.spec = inst.spec;
    auto oracle = enum_solve(inst.family, q);
    auto out = solve(GetParam(), inst.family, q);
    EXPECT_EQ(out.satisfying, oracle.satisfying);
    EXPECT_EQ(out.violating, oracle.violating);
    EXPECT_EQ(out.satisfying.size(), 1u);
}

INSTANTIATE_TEST_SUITE_P(Engines, AllEngines,
                         ::testing::Values(EngineKind::Enumeration, EngineKind::Cegar, EngineKind::Cegis), engine_name);

TEST(Enumeration, LexicographicTieBreak) {
    auto out = enum_solve(example_family(), query(QueryKind::Max, {4}));
    EXPECT_EQ(*out.witness, r2());
    auto feas = enum_solve(example_family(), query(QueryKind::Feasibility, {4}, ComparisonOp::GreaterEqual, 0.1));
    EXPECT_EQ(*feas.witness, r2());
    EXPECT_EQ(feas.stats.checks, 2u);
}

TEST(Enumeration, BoundAndQueryValidation) {
    Family fam = example_family();
    auto q = query(QueryKind::Partition, {4}, ComparisonOp::GreaterEqual, 0.1);
    q.enumeration_bound = 3;
    EXPECT_THROW((void)enum_solve(fam, q), ModelError);
    q = query(QueryKind::EpsOptimal, {4});
    q.epsilon = 0.0;
    EXPECT_THROW(validate_query(fam, q), ModelError);
    q.epsilon = 1.5;
    EXPECT_THROW(validate_query(fam, q), ModelError);
}

TEST(Enumeration, ThreadsDoNotChangeResults) {
    RandomFamilyParams p;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RandomInstance inst = random_instance(seed, p);
        SynthesisQuery q;
        q.kind = QueryKind::Partition;
        q.spec = inst.spec;
        auto one = enum_solve(inst.family, q);
        q.threads = 3;
        auto three = enum_solve(inst.family, q);
        ASSERT_EQ(one.satisfying, three.satisfying) << seed;
        ASSERT_EQ(one.violating, three.violating) << seed;
    }
}

TEST(Cegar, PartitionNeedsRefinement) {
    auto out = cegar_solve(example_family(), query(QueryKind::Partition, {4}, ComparisonOp::GreaterEqual, 0.1));
    std::size_t quotients = 0;
    for (const auto& rec : out.trace) {
        quotients += rec.event == "quotient";
    }
    EXPECT_GE(quotients, 2u);
    EXPECT_LT(out.stats.candidates, 4u + 1u);
}

TEST(Cegar, RejectsCoupledConstraints) {
    Family base = example_family();
    Family fam(5, 0, base.holes(), base.rows(), {Formula::implication(Formula::atom(0, 0), Formula::atom(1, 1))});
    EXPECT_THROW((void)cegar_solve(fam, query(QueryKind::Max, {4})), ModelError);
}

TEST(Counterexample, InitialStateRefutesFirstMember) {
    Family fam = example_family();
    Specification s = spec(5, {2}, ComparisonOp::LessEqual, 0.4);
    StateSet c = extract_counterexample(realise(fam, r1()), s, ExtractionMode::Refute);
    EXPECT_EQ(c, StateSet(5, {0}));
    EXPECT_EQ(conflict_holes(fam, c), std::vector<HoleId>{0});
    EXPECT_EQ(conflict_holes(fam, StateSet(5, {2, 3})), std::vector<HoleId>{1});
}

TEST(Counterexample, ModeMustFitTheVerdict) {
    Family fam = example_family();
    Specification upper = spec(5, {2}, ComparisonOp::LessEqual, 0.4);
    EXPECT_THROW((void)extract_counterexample(realise(fam, r4()), upper, ExtractionMode::Refute), ModelError);
    EXPECT_THROW((void)extract_counterexample(realise(fam, r1()), upper, ExtractionMode::Establish), ModelError);
}

TEST(Counterexample, EstablishingSubsystemSatisfiesAlone) {
    std::mt19937_64 rng(5);
    int seen = 0;
    for (int i = 0; i < 300; ++i) {
        std::size_t n = 3 + rng() % 20;
        MarkovChain c = random_chain(rng, n);
        Specification s = spec(n, {static_cast<StateIndex>(n - 1)}, ComparisonOp::GreaterEqual, 0.0);
        double v = oracle_reach(c, s.goal)[0];
        if (v < 0.05) {
            continue;
        }
        s.threshold = v * 0.8;
        StateSet crit = extract_counterexample(c, s, ExtractionMode::Establish);
        ASSERT_TRUE(crit.contains(0));
        ASSERT_GE(oracle_reach(sub_mc(c, crit), s.goal)[0], s.threshold - 1e-6) << i;
        ++seen;
    }
    EXPECT_GT(seen, 50);
}

TEST(Generalise, ClauseCoversOptionsWithEqualRows) {
    Family fam = example_family();
    LearnedClause cl = generalise(fam, r1(), StateSet(5, {0}), ClauseVerdict::Reject);
    ASSERT_EQ(cl.literals.size(), 1u);
    EXPECT_EQ(cl.literals[0].hole, 0u);
    EXPECT_EQ(cl.literals[0].options, std::vector<OptionIndex>{0});
    EXPECT_TRUE(cl.matches(r2()));
    EXPECT_FALSE(cl.matches(r3()));
}

TEST(AssignmentSpace, CandidateOrder) {
    Family fam = example_family();
    AssignmentSpace plain(fam, fam.full_subfamily());
    EXPECT_EQ(*plain.next_candidate(), r1());
    plain.learn({{{0, {0}}}, ClauseVerdict::Reject});
    EXPECT_EQ(*plain.next_candidate(), r3());

    AssignmentSpace guided(fam, fam.full_subfamily());
    guided.learn({{{0, {0}}}, ClauseVerdict::Reject});
    guided.note_refuted(r1());
    EXPECT_EQ(*guided.next_candidate(), r4());
    guided.learn({{{1, {1}}}, ClauseVerdict::Accept});
    EXPECT_EQ(*guided.next_candidate(), r3());
    guided.learn({{{0, {1}}, {1, {0}}}, ClauseVerdict::Reject});
    EXPECT_FALSE(guided.next_candidate().has_value());
    EXPECT_EQ(guided.classify(r2()), ClauseVerdict::Reject);
    EXPECT_EQ(guided.classify(r4()), ClauseVerdict::Accept);
}

TEST(AssignmentSpace, ConstraintsAndBudget) {
    Family base = example_family();
    std::vector<Hole> holes = base.holes();
    holes[0].costs = {5, 1};
    holes[1].costs = {1, 5};
    Family fam(5, 0, holes, base.rows(), {Formula::negation(Formula::atom(0, 1))}, CostModel::OptionSum);
    AssignmentSpace space(fam, fam.full_subfamily(), 6);
    std::vector<Realisation> seen;
    while (auto r = space.next_candidate()) {
        seen.push_back(*r);
        space.learn({{{0, {r->options[0]}}, {1, {r->options[1]}}}, ClauseVerdict::Reject});
    }
    EXPECT_EQ(seen, std::vector<Realisation>{r1()});
}

TEST(Cegis, ConflictPrunesTheSecondMember) {
    Family fam = example_family();
    auto q = query(QueryKind::Feasibility, {2}, ComparisonOp::LessEqual, 0.4);
    CegisDiagnostics diag;
    auto out = cegis_solve(fam, q, &diag);
    ASSERT_EQ(out.kind, OutcomeKind::Witness);
    EXPECT_EQ(*out.witness, r4());
    ASSERT_GE(out.trace.size(), 1u);
    EXPECT_EQ(*out.trace[0].candidate, r1());
    EXPECT_EQ(out.trace[0].critical, std::vector<StateIndex>{0});
    EXPECT_EQ(out.trace[0].holes, std::vector<HoleId>{0});
    for (const auto& rec : out.trace) {
        EXPECT_NE(*rec.candidate, r2());
    }
    EXPECT_LT(out.stats.checks, 4u);
    ASSERT_FALSE(diag.clauses.empty());
    EXPECT_TRUE(diag.clauses[0].matches(r2()));
}
