#include "chainsynth/checker.hpp"
#include "chainsynth/sketch/ast.hpp"
#include "chainsynth/sketch/elaborate.hpp"
#include "chainsynth/sketch/parser.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <deque>
#include <map>

using namespace chainsynth;
using namespace chainsynth::sketch;
using namespace chainsynth::testing;

namespace {

std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }

/// Runs the program for one realisation directly on valuations and compares
/// every reachable row with the elaborated family's chain.
void expect_faithful(const SketchProgram& prog, const ElaboratedSketch& sk, const Realisation& r) {
    PartialAssignment a(r.options.begin(), r.options.end());
    MarkovChain chain = realise(sk.family, r);
    std::map<Valuation, StateIndex> index;
    for (StateIndex s = 0; s < sk.valuations.size(); ++s) {
        index[sk.valuations[s]] = s;
    }
    Valuation init;
    for (const auto& v : prog.variables) {
        init.push_back(v.init);
    }
    std::deque<Valuation> queue{init};
    std::map<Valuation, bool> seen{{init, true}};
    while (!queue.empty()) {
        Valuation val = queue.front();
        queue.pop_front();
        ASSERT_TRUE(index.count(val)) << "valuation missing from the family";
        const Command* enabled = nullptr;
        for (const auto& c : prog.commands) {
            if (std::get<bool>(eval_expr(prog, c.guard, val, a))) {
                ASSERT_EQ(enabled, nullptr) << "two commands enabled";
                enabled = &c;
            }
        }
        ASSERT_NE(enabled, nullptr);
        std::vector<Transition> expect;
        for (const auto& b : enabled->branches) {
            double p = eval_probability(b.probability);
            if (p == 0.0) {
                continue;
            }
            Valuation next = val;
            for (const auto& u : b.update) {
                next[u.variable] = as_int(eval_expr(prog, u.value, val, a));
            }
            ASSERT_TRUE(index.count(next));
            expect.push_back({index[next], p});
            if (!seen[next]) {
                seen[next] = true;
                queue.push_back(next);
            }
        }
        Distribution want(expect);
        const Distribution& got = chain.row(index[val]);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got.entries()[i].target, want.entries()[i].target);
            EXPECT_NEAR(got.entries()[i].probability, want.entries()[i].probability, 1e-12);
        }
    }
}

void expect_error(const std::string& text, const std::string& fragment) {
    try {
        SketchProgram p = parse(text);
        (void)elaborate(p);
        ADD_FAILURE() << "accepted:\n" << text;
    } catch (const ModelError& e) {
        EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
}

const char* kWrap = "module m\ns : [0..3] init 0;\n";

} // namespace

TEST(Parse, ToySketch) {
    SketchProgram p = parse(read_sketch("toy.sk"));
    ASSERT_EQ(p.holes.size(), 2u);
    EXPECT_EQ(p.holes[0].name, "k2");
    EXPECT_EQ(option_label(p, p.holes[0].options[1]), "3");
    EXPECT_EQ(option_label(p, p.holes[1].options[1]), "4");
    ASSERT_EQ(p.variables.size(), 1u);
    EXPECT_EQ(p.variables[0].high, 4);
    EXPECT_EQ(p.commands.size(), 5u);
}

TEST(Parse, NamedCostedOptions) {
    SketchProgram p = parse("hole h either { x1 is 1 cost 2, x2 is 2 cost 3 }\nmodule m\ns:[0..2] init 0;\ns>=0 -> 1: s'=@h@;\nendmodule\n");
    ASSERT_EQ(p.holes[0].options.size(), 2u);
    EXPECT_EQ(*p.holes[0].options[0].name, "x1");
    EXPECT_EQ(p.holes[0].options[1].cost, 3u);
}

TEST(Parse, ConstraintOverOptionNames) {
    SketchProgram p = parse(
        "hole a either { x1 is 0, x2 is 1 }\nhole b either { x3 is 0, x4 is 1 }\n"
        "constraint (x1 | x2) => x3\nmodule m\ns:[0..1] init 0;\ns>=0 -> 1: s'=@a@;\nendmodule\n");
    ASSERT_EQ(p.constraints.size(), 1u);
    EXPECT_EQ(p.constraints[0].formula.kind, Expr::Kind::Implies);
}

TEST(Parse, ArithmeticInsideBranches) {
    SketchProgram p = parse(std::string(kWrap) + "s < 3 -> 0.6: s'=s+1 + 0.4: s'=s;\ns = 3 -> 1: s'=s;\nendmodule\n");
    ASSERT_EQ(p.commands[0].branches.size(), 2u);
    EXPECT_EQ(p.commands[0].branches[0].update[0].value.kind, Expr::Kind::Add);
}

TEST(Parse, ErrorsCarryPositions) {
    try {
        (void)parse("hole h either { 1 }\nmodule m\ns : [0..1] init 0;\ns = 0 -> 1 s'=1;\nendmodule\n");
        FAIL();
    } catch (const SketchError& e) {
        EXPECT_EQ(e.position().line, 4u);
    }
    expect_error("hole h either { 1 }\nhole h either { 2 }\nmodule m\ns:[0..1] init 0;\ns>=0 -> 1: s'=s;\nendmodule",
                 "h");
    expect_error(std::string(kWrap) + "t = 0 -> 1: s'=s;\nendmodule", "t");
    expect_error("module m\ns : [3..1] init 0;\nendmodule", "s");
}

TEST(EvalExpr, Examples) {
    SketchProgram p = parse("hole k2 either { 2, 3 }\nhole h either { s }\nmodule m\ns:[0..4] init 0;\ns>=0 -> 1: s'=s;\nendmodule\n");
    Expr e1 = parse_expression("s + 1", p);
    EXPECT_EQ(as_int(eval_expr(p, e1, {3}, {std::nullopt, std::nullopt})), 4);
    Expr hole_ref;
    hole_ref.kind = Expr::Kind::HoleRef;
    hole_ref.index = 0;
    EXPECT_EQ(as_int(eval_expr(p, hole_ref, {0}, {1, std::nullopt})), 3);
    Expr twice;
    twice.kind = Expr::Kind::Mul;
    Expr h = hole_ref;
    h.index = 1;
    Expr two;
    two.int_value = 2;
    twice.args = {h, two};
    EXPECT_EQ(as_int(eval_expr(p, twice, {2}, {std::nullopt, 0})), 4);
    EXPECT_THROW((void)eval_expr(p, hole_ref, {0}, {std::nullopt, std::nullopt}), ModelError);
}

TEST(Elaborate, ToySketchReproducesTheExampleFamily) {
    SketchProgram p = parse(read_sketch("toy.sk"));
    ElaboratedSketch sk = elaborate(p);
    Family expect = example_family();
    ASSERT_EQ(sk.family.num_states(), 5u);
    EXPECT_EQ(count_realisations(sk.family, sk.family.full_subfamily()), 4u);
    for (StateIndex s = 0; s < 5; ++s) {
        EXPECT_EQ(sk.valuations[s], Valuation{s});
    }
    for (const Realisation& r : {r1(), r2(), r3(), r4()}) {
        EXPECT_EQ(realise(sk.family, r), realise(expect, r)) << to_string(expect, r);
        expect_faithful(p, sk, r);
    }
    EXPECT_EQ(goal_states(p, sk, "s=4"), StateSet(5, {4}));
}

TEST(Elaborate, NoHoles) {
    SketchProgram p = parse(std::string(kWrap) + "s < 3 -> 0.5: s'=s+1 + 0.5: s'=s;\ns = 3 -> 1: true;\nendmodule\n");
    ElaboratedSketch sk = elaborate(p);
    EXPECT_EQ(sk.family.num_holes(), 0u);
    EXPECT_EQ(count_realisations(sk.family, sk.family.full_subfamily()), 1u);
    expect_faithful(p, sk, Realisation{});
}

TEST(Elaborate, FeatureSketchHasFourMembers) {
    SketchProgram p = parse(read_sketch("bsn.sk"));
    ElaboratedSketch sk = elaborate(p);
    auto members = enumerate_realisations(sk.family, sk.family.full_subfamily());
    ASSERT_EQ(members.size(), 4u);
    for (const auto& r : members) {
        expect_faithful(p, sk, r);
    }
}

TEST(Elaborate, HoleGuardsAreCoupledPerRealisation) {
    SketchProgram p = parse(read_sketch("dpm.sk"));
    ElaboratedSketch sk = elaborate(p);
    for (const auto& r : enumerate_realisations(sk.family, sk.family.full_subfamily())) {
        expect_faithful(p, sk, r);
    }
}

TEST(Elaborate, CostsAndConstraintsTransfer) {
    SketchProgram p = parse(read_sketch("dpm.sk"));
    ElaboratedSketch sk = elaborate(p);
    const Family& fam = sk.family;
    EXPECT_EQ(fam.design_space_size(), 12u);
    EXPECT_EQ(count_realisations(fam, fam.full_subfamily()), 10u);
    for (const auto& r : enumerate_realisations(fam, fam.full_subfamily())) {
        std::uint64_t sum = 0;
        for (std::size_t h = 0; h < p.holes.size(); ++h) {
            sum += p.holes[h].options[r.options[h]].cost;
        }
        EXPECT_EQ(cost(fam, r, CostModel::OptionSum), sum);
    }
}

TEST(Elaborate, RejectsBadPrograms) {
    expect_error(std::string(kWrap) + "s < 2 -> 1: s'=s+1;\ns > 0 -> 1: s'=s-1;\nendmodule", "enabled");
    expect_error(std::string(kWrap) + "s < 2 -> 1: s'=s+1;\nendmodule", "no command");
    expect_error(std::string(kWrap) + "s >= 0 -> 0.5: s'=0 + 0.4: s'=1;\nendmodule", "sum");
    expect_error(std::string(kWrap) + "s >= 0 -> 1: s'=s+1;\nendmodule", "outside");
    expect_error("hole h either { 1, 2 }\n" + std::string(kWrap) + "s >= 0 -> @h@: s'=0;\nendmodule", "");
}

TEST(Elaborate, StateBoundIsEnforced) {
    SketchProgram p = parse("module m\ns : [0..100] init 0;\ns < 100 -> 1: s'=s+1;\ns = 100 -> 1: s'=s;\nendmodule");
    EXPECT_EQ(elaborate(p).family.num_states(), 101u);
    EXPECT_THROW((void)elaborate(p, {50}), ModelError);
}

TEST(PrettyPrint, RoundTripPreservesTheFamily) {
    for (const char* name : {"toy.sk", "bsn.sk", "dpm.sk"}) {
        SketchProgram p = parse(read_sketch(name));
        std::string printed = pretty_print(p);
        SketchProgram q = parse(printed);
        EXPECT_EQ(elaborate(q).family, elaborate(p).family) << name << "\n" << printed;
        EXPECT_EQ(pretty_print(q), printed) << name;
    }
}
