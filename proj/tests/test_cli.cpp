#include "bench.hpp"
#include "cli.hpp"

#include "chainsynth/family_json.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

using namespace chainsynth;
using namespace chainsynth::testing;
using nlohmann::json;

namespace {

struct Invocation {
    int code;
    std::string out;
    std::string err;
};

Invocation run_cli(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string toy() { return sketch_path("toy.sk"); }

/// Drops wall-clock fields so that runs can be compared byte for byte.
std::string without_timing(const std::string& text) {
    static const std::regex wall(R"("wall_ms": [0-9.eE+-]+)");
    return std::regex_replace(text, wall, "\"wall_ms\": 0");
}

} // namespace

TEST(CliCheck, UnreachableGoalIsViolated) {
    Invocation r = run_cli({"check", "--input", toy(), "--assign", "k2=2,k3=2", "--spec", "P>=0.1 [F s=4]"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("value: 0\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("violated"), std::string::npos);
}

TEST(CliCheck, SatisfiedSpecExitsZero) {
    Invocation r = run_cli({"check", "--input", toy(), "--assign", "k2=3,k3=4", "--spec", "P>=0.1 [F s=4]", "--json"});
    EXPECT_EQ(r.code, 0);
    json j = json::parse(r.out);
    EXPECT_EQ(j["outcome"]["holds"], true);
    EXPECT_DOUBLE_EQ(j["outcome"]["value"].get<double>(), 1.0);
}

TEST(CliCheck, ZeroHoleSketch) {
    std::string path = ::testing::TempDir() + "/plain.sk";
    std::ofstream(path) << "module m\ns : [0..1] init 0;\ns = 0 -> 0.5: s'=1 + 0.5: s'=0;\ns = 1 -> 1: s'=1;\nendmodule\n";
    Invocation r = run_cli({"check", "--input", path, "--assign", "", "--spec", "P>=0 [F s=1]"});
    EXPECT_EQ(r.code, 0) << r.err;
}

TEST(CliCheck, ErrorsExitTwo) {
    EXPECT_EQ(run_cli({"check", "--input", toy(), "--assign", "k2=2", "--spec", "P>=0.1 [F s=4]"}).code, 2);
    EXPECT_EQ(run_cli({"check", "--input", toy(), "--assign", "k2=2,k3=2", "--spec", "P>=0.1 F s=4"}).code, 2);
    EXPECT_EQ(run_cli({"check", "--input", "/nonexistent.sk", "--assign", "k2=2,k3=2", "--spec", "P>=0.1 [F s=4]"}).code,
              2);
    EXPECT_EQ(run_cli({"check", "--input", toy(), "--assign", "k2=2,k3=2", "--spec", "P>=0.1 [F s=9]"}).code, 2);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
    EXPECT_EQ(run_cli({}).code, 2);
}

TEST(CliSynth, PartitionJsonOnEveryEngine) {
    for (const char* engine : {"enum", "cegar", "cegis"}) {
        Invocation r = run_cli({"synth", "partition", "--input", toy(), "--spec", "P>=0.1 [F s=4]", "--engine", engine, "--json"});
        ASSERT_EQ(r.code, 0) << r.err;
        json j = json::parse(r.out);
        EXPECT_EQ(j["engine"], engine);
        EXPECT_EQ(j["outcome"]["kind"], "partition");
        json t = json::array({{{"k2", "2"}, {"k3", "4"}}, {{"k2", "3"}, {"k3", "4"}}});
        json f = json::array({{{"k2", "2"}, {"k3", "2"}}, {{"k2", "3"}, {"k3", "2"}}});
        EXPECT_EQ(j["outcome"]["T"], t);
        EXPECT_EQ(j["outcome"]["F"], f);
        for (const char* key : {"candidates", "checks", "iterations", "wall_ms"}) {
            EXPECT_TRUE(j["stats"].contains(key)) << key;
        }
    }
}

TEST(CliSynth, BudgetedStructuralMax) {
    Invocation r = run_cli({"synth", "max", "--input", toy(), "--goal", "s=4", "--cost", "structural", "--budget", "9", "--engine",
                     "enum", "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    json j = json::parse(r.out);
    EXPECT_EQ(j["outcome"]["witness"], (json{{"k2", "2"}, {"k3", "2"}}));
    EXPECT_EQ(j["outcome"]["value"].get<double>(), 0.0);
    EXPECT_EQ(j["outcome"]["cost"], 8);
    r = run_cli({"synth", "max", "--input", toy(), "--goal", "s=4", "--cost", "structural", "--budget", "7"});
    EXPECT_EQ(r.code, 1);
}

TEST(CliSynth, RestrictedFeasibilityIsUnsatisfiable) {
    for (const char* engine : {"enum", "cegar", "cegis"}) {
        Invocation r = run_cli({"synth", "feasible", "--input", toy(), "--spec", "P>=0.1 [F s=4]", "--restrict", "k3=2",
                         "--engine", engine});
        EXPECT_EQ(r.code, 1) << engine << r.err;
    }
    EXPECT_EQ(run_cli({"synth", "feasible", "--input", toy(), "--spec", "P>=0.1 [F s=4]", "--restrict", "k3=9"}).code, 2);
}

TEST(CliSynth, EngineIncompatibilityIsAnError) {
    Invocation r = run_cli({"synth", "min", "--input", sketch_path("dpm.sk"), "--goal", "q=3", "--engine", "cegar"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("cegis"), std::string::npos);
    EXPECT_EQ(run_cli({"synth", "min", "--input", sketch_path("dpm.sk"), "--goal", "q=3", "--engine", "cegis"}).code, 0);
}

TEST(CliSynth, ThresholdProblemsNeedASpec) {
    EXPECT_EQ(run_cli({"synth", "partition", "--input", toy(), "--goal", "s=4"}).code, 2);
    EXPECT_EQ(run_cli({"synth", "eps", "--input", toy(), "--goal", "s=4", "--epsilon", "0"}).code, 2);
    EXPECT_EQ(run_cli({"synth", "eps", "--input", toy(), "--goal", "s=4", "--epsilon", "0.5"}).code, 0);
}

TEST(CliSynth, JsonFamilyInput) {
    std::string path = ::testing::TempDir() + "/example.json";
    std::ofstream(path) << family_to_json(example_family());
    Invocation r = run_cli({"synth", "max", "--input", path, "--goal", "s=4", "--cost", "structural", "--budget", "10",
                     "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out)["outcome"]["witness"], (json{{"k2", "2"}, {"k3", "4"}}));
}

TEST(CliSynth, OutputIsStableAcrossRuns) {
    std::vector<std::string> args{"synth", "partition", "--input", toy(), "--spec", "P>=0.1 [F s=4]", "--engine", "cegis",
                                  "--json"};
    EXPECT_EQ(without_timing(run_cli(args).out), without_timing(run_cli(args).out));
}

TEST(CliSynth, StateBoundFromEnvironment) {
    setenv("CHAINSYNTH_MAX_STATES", "3", 1);
    Invocation small = run_cli({"synth", "max", "--input", toy(), "--goal", "s=4"});
    setenv("CHAINSYNTH_MAX_STATES", "zero", 1);
    Invocation bad = run_cli({"synth", "max", "--input", toy(), "--goal", "s=4"});
    unsetenv("CHAINSYNTH_MAX_STATES");
    EXPECT_EQ(small.code, 2);
    EXPECT_EQ(bad.code, 2);
    EXPECT_EQ(run_cli({"synth", "max", "--input", toy(), "--goal", "s=4"}).code, 0);
}

TEST(CliBench, RandomFamiliesAgree) {
    Invocation r = run_cli({"bench", "--seed", "0", "--instances", "100", "--json"});
    ASSERT_EQ(r.code, 0) << r.out;
    json j = json::parse(r.out);
    EXPECT_EQ(j["instances"], 100);
    EXPECT_TRUE(j["failures"].empty());
    EXPECT_EQ(j["engines"].size(), 3u);
}

TEST(CliBench, SingleTinyInstance) {
    Invocation r = run_cli({"bench", "--instances", "1", "--max-states", "1", "--max-holes", "0"});
    EXPECT_EQ(r.code, 0) << r.out;
}

TEST(CliBench, PruningInstanceNeedsFewChecks) {
    Invocation r = run_cli({"bench", "--pruning", "64", "--json"});
    ASSERT_EQ(r.code, 0) << r.out;
    json j = json::parse(r.out);
    EXPECT_LT(j["engines"]["cegis"]["checks"].get<int>(), 64);
}

TEST(CliBench, DisagreementProducesRepro) {
    // A deliberately wrong outcome must be reported with a repro.
    Family fam = example_family();
    SynthesisQuery q;
    q.kind = QueryKind::Partition;
    q.spec = spec(5, {4}, ComparisonOp::GreaterEqual, 0.1);
    SynthesisOutcome oracle = solve(EngineKind::Enumeration, fam, q);
    SynthesisOutcome wrong = oracle;
    std::swap(wrong.satisfying, wrong.violating);
    EXPECT_FALSE(cli::compare_outcomes(fam, q, oracle, wrong).empty());
    EXPECT_TRUE(cli::compare_outcomes(fam, q, oracle, oracle).empty());
}

TEST(CliSpec, Parsing) {
    auto s = cli::parse_spec("P<=0.4 [F s=2 & t>1]");
    EXPECT_EQ(s.op, ComparisonOp::LessEqual);
    EXPECT_DOUBLE_EQ(s.threshold, 0.4);
    EXPECT_EQ(s.goal, "s=2 & t>1");
    EXPECT_THROW((void)cli::parse_spec("Q>=1 [F s=1]"), ModelError);
}
