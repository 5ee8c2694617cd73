#include "cli.hpp"

#include "bench.hpp"
#include "chainsynth/engines/cegar.hpp"
#include "chainsynth/family_json.hpp"
#include "chainsynth/sketch/parser.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <regex>
#include <sstream>

namespace chainsynth::cli {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ModelError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t max_states_from_env() {
    const char* env = std::getenv("CHAINSYNTH_MAX_STATES");
    if (env == nullptr || *env == '\0') {
        return sketch::kDefaultMaxStates;
    }
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(env, &pos);
        if (pos != std::string(env).size() || v == 0) {
            throw std::invalid_argument(env);
        }
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ModelError(std::string("CHAINSYNTH_MAX_STATES must be a positive integer, got '") + env + "'");
    }
}

} // namespace

LoadedModel load_model(const std::string& path, const std::string& format) {
    std::string fmt = format;
    if (fmt.empty() || fmt == "auto") {
        fmt = path.size() >= 5 && path.substr(path.size() - 5) == ".json" ? "json" : "sketch";
    }
    std::string text = read_file(path);
    LoadedModel model;
    if (fmt == "sketch") {
        model.program = sketch::parse(text);
        model.sketch = sketch::elaborate(model.program, {max_states_from_env()});
        return model;
    }
    if (fmt != "json") {
        throw ModelError("unknown input format '" + format + "'");
    }
    model.sketch.family = family_from_json(text);
    std::size_t n = model.sketch.family.num_states();
    model.program.variables.push_back({"s", 0, static_cast<std::int64_t>(n) - 1, 0, {}});
    model.sketch.variables = {"s"};
    for (std::size_t s = 0; s < n; ++s) {
        model.sketch.valuations.push_back({static_cast<std::int64_t>(s)});
    }
    return model;
}

ParsedSpec parse_spec(const std::string& text) {
    static const std::regex pattern(R"(^\s*P\s*(>=|<=|>|<)\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*\[\s*F\s+(.+?)\s*\]\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, pattern)) {
        throw ModelError("malformed spec '" + text + "'; expected e.g. \"P>=0.1 [F s=4]\"");
    }
    ParsedSpec out;
    std::string op = m[1];
    out.op = op == ">=" ? ComparisonOp::GreaterEqual
             : op == ">" ? ComparisonOp::Greater
             : op == "<=" ? ComparisonOp::LessEqual
                          : ComparisonOp::Less;
    out.threshold = std::stod(m[2]);
    out.goal = m[3];
    return out;
}

namespace {

struct Options {
    std::string input;
    std::string format = "auto";
    std::string spec;
    std::string goal;
    std::string engine = "enum";
    double epsilon = 0.0;
    std::optional<std::uint64_t> budget;
    std::string cost;
    std::string assign;
    double tolerance = kDefaultTolerance;
    std::size_t threads = 1;
    std::uint64_t seed = 0;
    bool json = false;
    std::vector<std::string> restrict;
    bool min_cost = false;
    std::string kind;
    // bench
    std::size_t instances = 100;
    std::uint64_t max_realisations = 256;
    std::size_t max_states = 12;
    std::size_t max_holes = 4;
    std::size_t max_options = 4;
    std::vector<std::size_t> pruning;
};

EngineKind parse_engine(const std::string& name) {
    if (name == "enum") {
        return EngineKind::Enumeration;
    }
    if (name == "cegar") {
        return EngineKind::Cegar;
    }
    if (name == "cegis") {
        return EngineKind::Cegis;
    }
    throw ModelError("unknown engine '" + name + "'");
}

QueryKind parse_kind(const std::string& name) {
    static const std::map<std::string, QueryKind> kinds = {
        {"feasible", QueryKind::Feasibility}, {"partition", QueryKind::Partition}, {"max", QueryKind::Max},
        {"min", QueryKind::Min},              {"eps", QueryKind::EpsOptimal},
    };
    auto it = kinds.find(name);
    if (it == kinds.end()) {
        throw ModelError("unknown synthesis problem '" + name + "'");
    }
    return it->second;
}

Specification build_spec(const LoadedModel& model, const Options& opt, bool threshold_required) {
    Specification spec;
    spec.tolerance = opt.tolerance;
    std::string goal = opt.goal;
    if (!opt.spec.empty()) {
        ParsedSpec p = parse_spec(opt.spec);
        spec.op = p.op;
        spec.threshold = p.threshold;
        if (goal.empty()) {
            goal = p.goal;
        }
    } else if (threshold_required) {
        throw ModelError("--spec is required for this command");
    }
    if (goal.empty()) {
        throw ModelError("a goal is required: pass --goal or --spec");
    }
    spec.goal = sketch::goal_states(model.program, model.sketch, goal);
    if (spec.goal.empty()) {
        throw ModelError("goal '" + goal + "' matches no reachable state");
    }
    return spec;
}

Subfamily build_scope(const Family& fam, const std::vector<std::string>& restrictions) {
    Subfamily scope = fam.full_subfamily();
    for (const auto& text : restrictions) {
        auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ModelError("malformed restriction '" + text + "'; expected hole=opt1|opt2");
        }
        auto h = fam.find_hole(text.substr(0, eq));
        if (!h) {
            throw ModelError("unknown hole '" + text.substr(0, eq) + "'");
        }
        std::vector<OptionIndex> keep;
        std::stringstream rest(text.substr(eq + 1));
        std::string label;
        while (std::getline(rest, label, '|')) {
            auto o = fam.find_option(*h, label);
            if (!o) {
                throw ModelError("hole '" + fam.hole(*h).name + "' has no option '" + label + "'");
            }
            keep.push_back(*o);
        }
        if (keep.empty()) {
            throw ModelError("restriction '" + text + "' keeps no option");
        }
        scope = scope.restricted(*h, std::move(keep));
    }
    return scope;
}

ordered_json realisation_json(const Family& fam, const Realisation& r) {
    ordered_json j = ordered_json::object();
    for (HoleId h = 0; h < fam.num_holes(); ++h) {
        j[fam.hole(h).name] = fam.hole(h).options[r.options[h]];
    }
    return j;
}

std::string format_value(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

int cmd_check(const Options& opt, std::ostream& out) {
    LoadedModel model = load_model(opt.input, opt.format);
    const Family& fam = model.sketch.family;
    Specification spec = build_spec(model, opt, true);
    Realisation r = parse_assignment(fam, opt.assign);
    MarkovChain chain = realise(fam, r);
    CheckResult result = check(chain, spec);
    if (opt.json) {
        ordered_json j;
        j["query"] = {{"command", "check"}, {"input", opt.input}, {"spec", opt.spec}, {"assign", to_string(fam, r)}};
        j["outcome"] = {{"holds", result.holds}, {"value", result.value}};
        out << j.dump(2) << "\n";
    } else {
        out << "realisation: " << to_string(fam, r) << "\n"
            << "value: " << format_value(result.value) << "\n"
            << "verdict: " << (result.holds ? "satisfied" : "violated") << "\n";
    }
    return result.holds ? 0 : 1;
}

int cmd_synth(const Options& opt, std::ostream& out) {
    QueryKind kind = parse_kind(opt.kind);
    EngineKind engine = parse_engine(opt.engine);
    LoadedModel model = load_model(opt.input, opt.format);
    const Family& fam = model.sketch.family;

    SynthesisQuery query;
    query.kind = kind;
    bool threshold = kind == QueryKind::Feasibility || kind == QueryKind::Partition;
    query.spec = build_spec(model, opt, threshold);
    query.epsilon = opt.epsilon;
    query.budget = opt.budget;
    if (!opt.cost.empty()) {
        if (opt.cost == "structural") {
            query.cost_model = CostModel::Structural;
        } else if (opt.cost == "option-sum") {
            query.cost_model = CostModel::OptionSum;
        } else {
            throw ModelError("unknown cost model '" + opt.cost + "'");
        }
    }
    query.cost_optimal = opt.min_cost;
    if (!opt.restrict.empty()) {
        query.scope = build_scope(fam, opt.restrict);
    }
    query.threads = opt.threads;
    if (engine == EngineKind::Cegar) {
        (void)fold_constraints(fam, fam.full_subfamily());
    }

    SynthesisOutcome result = solve(engine, fam, query);

    if (opt.json) {
        ordered_json j;
        ordered_json q;
        q["kind"] = to_string(kind);
        q["input"] = opt.input;
        if (!opt.spec.empty()) {
            q["spec"] = opt.spec;
        }
        if (!opt.goal.empty()) {
            q["goal"] = opt.goal;
        }
        if (kind == QueryKind::EpsOptimal) {
            q["epsilon"] = opt.epsilon;
        }
        if (opt.budget) {
            q["budget"] = *opt.budget;
        }
        q["cost_model"] = to_string(effective_cost_model(fam, query));
        if (opt.min_cost) {
            q["min_cost"] = true;
        }
        if (!opt.restrict.empty()) {
            q["restrict"] = opt.restrict;
        }
        j["query"] = q;
        j["engine"] = to_string(engine);
        ordered_json o;
        o["kind"] = to_string(result.kind);
        if (result.witness) {
            o["witness"] = realisation_json(fam, *result.witness);
        }
        if (result.value) {
            o["value"] = *result.value;
        }
        if (result.cost) {
            o["cost"] = *result.cost;
        }
        if (result.kind == OutcomeKind::Partition) {
            o["T"] = ordered_json::array();
            for (const auto& r : result.satisfying) {
                o["T"].push_back(realisation_json(fam, r));
            }
            o["F"] = ordered_json::array();
            for (const auto& r : result.violating) {
                o["F"].push_back(realisation_json(fam, r));
            }
        }
        j["outcome"] = o;
        j["stats"] = {{"candidates", result.stats.candidates},
                      {"checks", result.stats.checks},
                      {"iterations", result.stats.iterations},
                      {"wall_ms", result.stats.wall_ms}};
        out << j.dump(2) << "\n";
    } else {
        out << "engine: " << to_string(engine) << "\n"
            << "problem: " << to_string(kind) << "\n"
            << "outcome: " << to_string(result.kind) << "\n";
        if (result.witness) {
            out << "witness: " << to_string(fam, *result.witness) << "\n";
        }
        if (result.value) {
            out << "value: " << format_value(*result.value) << "\n";
        }
        if (result.cost) {
            out << "cost: " << *result.cost << "\n";
        }
        if (result.kind == OutcomeKind::Partition) {
            auto list = [&](const char* name, const std::vector<Realisation>& rs) {
                out << name << " (" << rs.size() << "):";
                for (const auto& r : rs) {
                    out << " {" << to_string(fam, r) << "}";
                }
                out << "\n";
            };
            list("T", result.satisfying);
            list("F", result.violating);
        }
        out << "candidates: " << result.stats.candidates << "  checks: " << result.stats.checks
            << "  iterations: " << result.stats.iterations << "  wall_ms: " << format_value(result.stats.wall_ms)
            << "\n";
    }
    return result.kind == OutcomeKind::Unsatisfiable ? 1 : 0;
}

int cmd_bench(const Options& opt, std::ostream& out) {
    BenchConfig config;
    config.seed = opt.seed;
    config.instances = opt.instances;
    config.threads = opt.threads;
    config.params.max_realisations = opt.max_realisations;
    config.params.max_states = opt.max_states;
    config.params.min_states = std::min<std::size_t>(3, opt.max_states);
    config.params.max_holes = opt.max_holes;
    config.params.max_options = opt.max_options;
    if (!opt.pruning.empty()) {
        if (opt.pruning.size() > 2) {
            throw ModelError("--pruning takes OUTER or OUTER,INNER");
        }
        config.pruning = {opt.pruning[0], opt.pruning.size() > 1 ? opt.pruning[1] : 0};
        config.queries = {QueryKind::Partition, QueryKind::Feasibility};
    }
    BenchReport report = run_bench(config);
    if (opt.json) {
        ordered_json j;
        j["instances"] = report.instances;
        j["realisations"] = report.realisations;
        ordered_json engines = ordered_json::object();
        for (const auto& [name, t] : report.engines) {
            engines[name] = {{"runs", t.runs}, {"candidates", t.candidates}, {"checks", t.checks},
                             {"wall_ms", t.wall_ms}};
        }
        j["engines"] = engines;
        j["failures"] = ordered_json::array();
        for (const auto& f : report.failures) {
            j["failures"].push_back(
                {{"instance", f.instance}, {"query", f.query}, {"message", f.message}, {"repro", f.repro}});
        }
        j["wall_ms"] = report.wall_ms;
        out << j.dump(2) << "\n";
    } else {
        out << "instances: " << report.instances << "  realisations: " << report.realisations << "\n";
        out << std::left << std::setw(8) << "engine" << std::right << std::setw(8) << "runs" << std::setw(14)
            << "candidates" << std::setw(12) << "checks" << std::setw(14) << "wall_ms" << "\n";
        for (const auto& [name, t] : report.engines) {
            out << std::left << std::setw(8) << name << std::right << std::setw(8) << t.runs << std::setw(14)
                << t.candidates << std::setw(12) << t.checks << std::setw(14) << std::fixed << std::setprecision(1)
                << t.wall_ms << "\n";
            out.unsetf(std::ios::fixed);
        }
        out << "failures: " << report.failures.size() << "\n";
        for (const auto& f : report.failures) {
            out << "instance " << f.instance << " (" << f.query << "): " << f.message << "\n" << f.repro;
        }
    }
    return report.failures.empty() ? 0 : 1;
}

void add_model_options(CLI::App* app, Options& opt) {
    app->add_option("--input", opt.input, "Sketch (.sk) or JSON family")->required();
    app->add_option("--format", opt.format, "sketch, json or auto")->check(CLI::IsMember({"auto", "sketch", "json"}));
    app->add_option("--spec", opt.spec, "Specification, e.g. \"P>=0.1 [F s=4]\"");
    app->add_option("--goal", opt.goal, "Goal predicate over the sketch variables");
    app->add_option("--tolerance", opt.tolerance, "Threshold comparison slack")->check(CLI::NonNegativeNumber);
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthesis of Markov chains from families with holes", "chainsynth"};
    app.require_subcommand(1);
    Options opt;

    auto* check_cmd = app.add_subcommand("check", "Check one realisation against a specification");
    add_model_options(check_cmd, opt);
    check_cmd->add_option("--assign", opt.assign, "Total assignment hole=option,...")->required();
    check_cmd->add_flag("--json", opt.json, "Machine-readable output");

    auto* synth_cmd = app.add_subcommand("synth", "Solve a synthesis problem");
    synth_cmd->add_option("problem", opt.kind, "feasible, partition, max, min or eps")
        ->required()
        ->check(CLI::IsMember({"feasible", "partition", "max", "min", "eps"}));
    add_model_options(synth_cmd, opt);
    synth_cmd->add_option("--engine", opt.engine, "enum, cegar or cegis")
        ->check(CLI::IsMember({"enum", "cegar", "cegis"}));
    synth_cmd->add_option("--epsilon", opt.epsilon, "Relative slack for eps");
    synth_cmd->add_option("--budget", opt.budget, "Cost budget");
    synth_cmd->add_option("--cost", opt.cost, "structural or option-sum")
        ->check(CLI::IsMember({"structural", "option-sum"}));
    synth_cmd->add_option("--restrict", opt.restrict, "Restrict a hole: hole=opt1|opt2 (repeatable)");
    synth_cmd->add_flag("--min-cost", opt.min_cost, "Return the cheapest admissible realisation");
    synth_cmd->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
    synth_cmd->add_flag("--json", opt.json, "Machine-readable output");

    auto* bench_cmd = app.add_subcommand("bench", "Engine agreement on random families");
    bench_cmd->add_option("--seed", opt.seed, "First seed");
    bench_cmd->add_option("--instances", opt.instances, "Number of random families");
    bench_cmd->add_option("--max-realisations", opt.max_realisations, "Members per family at most");
    bench_cmd->add_option("--max-states", opt.max_states, "States per family at most")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--max-holes", opt.max_holes, "Holes per family at most");
    bench_cmd->add_option("--max-options", opt.max_options, "Options per hole at most");
    bench_cmd->add_option("--pruning", opt.pruning, "Constructed instance OUTER[,INNER] instead of random families")
        ->delimiter(',');
    bench_cmd->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
    bench_cmd->add_flag("--json", opt.json, "Machine-readable output");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (check_cmd->parsed()) {
            return cmd_check(opt, out);
        }
        if (synth_cmd->parsed()) {
            return cmd_synth(opt, out);
        }
        return cmd_bench(opt, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace chainsynth::cli
