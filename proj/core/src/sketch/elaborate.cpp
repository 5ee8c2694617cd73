#include "chainsynth/sketch/elaborate.hpp"

#include "chainsynth/sketch/parser.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

namespace chainsynth::sketch {

namespace {

enum class Type { Int, Real, Bool };

struct TypeContext {
    bool variables;
    bool holes;
    bool reals;
    const char* where;
};

bool numeric(Type t) { return t != Type::Bool; }

Type type_of(const Expr& e, const TypeContext& ctx) {
    using K = Expr::Kind;
    auto fail = [&](const std::string& what) -> Type {
        throw SketchError(what + " in " + ctx.where, e.pos);
    };
    switch (e.kind) {
    case K::IntLiteral:
        return Type::Int;
    case K::RealLiteral:
        return ctx.reals ? Type::Real : fail("real literal '" + e.text + "' not allowed");
    case K::BoolLiteral:
        return Type::Bool;
    case K::Variable:
        return ctx.variables ? Type::Int : fail("variable '" + e.text + "' not allowed");
    case K::HoleRef:
        return ctx.holes ? Type::Int : fail("hole reference '@" + e.text + "@' not allowed");
    case K::OptionRef:
        return fail("option name not allowed");
    case K::Negate: {
        Type t = type_of(e.args[0], ctx);
        return numeric(t) ? t : fail("'-' applied to a boolean");
    }
    case K::Not:
        return type_of(e.args[0], ctx) == Type::Bool ? Type::Bool : fail("'!' applied to a number");
    default:
        break;
    }
    Type lhs = type_of(e.args[0], ctx);
    Type rhs = type_of(e.args[1], ctx);
    switch (e.kind) {
    case K::Add:
    case K::Sub:
    case K::Mul:
        if (!numeric(lhs) || !numeric(rhs)) {
            return fail("arithmetic on a boolean");
        }
        return lhs == Type::Real || rhs == Type::Real ? Type::Real : Type::Int;
    case K::Div:
        if (!ctx.reals) {
            return fail("division not allowed");
        }
        if (!numeric(lhs) || !numeric(rhs)) {
            return fail("arithmetic on a boolean");
        }
        return Type::Real;
    case K::Eq:
    case K::Ne:
        if (numeric(lhs) != numeric(rhs)) {
            return fail("comparison between a number and a boolean");
        }
        return Type::Bool;
    case K::Lt:
    case K::Le:
    case K::Gt:
    case K::Ge:
        if (!numeric(lhs) || !numeric(rhs)) {
            return fail("ordering comparison on a boolean");
        }
        return Type::Bool;
    default:
        if (lhs != Type::Bool || rhs != Type::Bool) {
            return fail("boolean connective applied to a number");
        }
        return Type::Bool;
    }
}

void collect_holes(const Expr& e, std::set<HoleId>& out) {
    if (e.kind == Expr::Kind::HoleRef) {
        out.insert(e.index);
    }
    for (const auto& a : e.args) {
        collect_holes(a, out);
    }
}

std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }
bool as_bool(const Value& v) { return std::get<bool>(v); }

Formula to_formula(const Expr& e) {
    using K = Expr::Kind;
    switch (e.kind) {
    case K::BoolLiteral:
        return Formula::constant(e.bool_value);
    case K::OptionRef:
        return Formula::atom(e.index, e.option);
    case K::Not:
        return Formula::negation(to_formula(e.args[0]));
    case K::And:
        return Formula::conjunction({to_formula(e.args[0]), to_formula(e.args[1])});
    case K::Or:
        return Formula::disjunction({to_formula(e.args[0]), to_formula(e.args[1])});
    case K::Implies:
        return Formula::implication(to_formula(e.args[0]), to_formula(e.args[1]));
    case K::Iff:
        return Formula::equivalence(to_formula(e.args[0]), to_formula(e.args[1]));
    default:
        throw SketchError("unsupported constraint form", e.pos);
    }
}

std::string describe(const SketchProgram& prog, const Valuation& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += prog.variables[i].name + "=" + std::to_string(v[i]);
    }
    return out;
}

class Elaborator {
public:
    Elaborator(const SketchProgram& prog, const ElaborationOptions& options) : _prog(prog), _options(options) {
        for (const auto& h : prog.holes) {
            _radix.push_back(h.options.size());
        }
        for (const auto& cmd : prog.commands) {
            std::set<HoleId> g;
            collect_holes(cmd.guard, g);
            _guard_holes.emplace_back(g.begin(), g.end());
            CommandInfo info;
            double total = 0.0;
            for (std::size_t b = 0; b < cmd.branches.size(); ++b) {
                double p = eval_probability(cmd.branches[b].probability);
                if (p < 0.0 || p > 1.0 + kDistributionTolerance) {
                    throw SketchError("branch probability " + std::to_string(p) + " outside [0, 1]",
                                      cmd.branches[b].probability.pos);
                }
                total += p;
                if (p > 0.0) {
                    info.branches.push_back(b);
                    info.probabilities.push_back(p);
                    std::set<HoleId> u;
                    for (const auto& a : cmd.branches[b].update) {
                        collect_holes(a.value, u);
                    }
                    info.update_holes.emplace_back(u.begin(), u.end());
                }
            }
            if (std::abs(total - 1.0) > kDistributionTolerance) {
                throw SketchError("branch probabilities sum to " + std::to_string(total) + ", not 1", cmd.pos);
            }
            _commands.push_back(std::move(info));
        }
    }

    ElaboratedSketch run() {
        Valuation init;
        for (const auto& v : _prog.variables) {
            init.push_back(v.init);
        }
        intern(init);
        for (std::size_t s = 0; s < _valuations.size(); ++s) {
            _rows.push_back(build_row(_valuations[s]));
        }

        std::vector<Hole> holes;
        for (const auto& h : _prog.holes) {
            Hole hole;
            hole.name = h.name;
            std::set<std::string> labels;
            for (const auto& o : h.options) {
                std::string label = option_label(_prog, o);
                if (!labels.insert(label).second) {
                    throw SketchError("hole '" + h.name + "' has two options labelled '" + label + "'", o.pos);
                }
                hole.options.push_back(label);
                hole.costs.push_back(o.cost);
            }
            holes.push_back(std::move(hole));
        }
        std::vector<Formula> constraints;
        for (const auto& c : _prog.constraints) {
            constraints.push_back(to_formula(c.formula));
        }
        ElaboratedSketch out;
        out.family = Family(_valuations.size(), 0, std::move(holes), std::move(_rows), std::move(constraints),
                            CostModel::OptionSum);
        for (const auto& v : _prog.variables) {
            out.variables.push_back(v.name);
        }
        out.valuations = std::move(_valuations);
        return out;
    }

private:
    struct CommandInfo {
        std::vector<std::size_t> branches;   // indices of branches with positive mass
        std::vector<double> probabilities;
        std::vector<std::vector<HoleId>> update_holes;
    };

    StateIndex intern(const Valuation& v) {
        auto [it, inserted] = _index.try_emplace(v, static_cast<StateIndex>(_valuations.size()));
        if (inserted) {
            if (_valuations.size() >= _options.max_states) {
                throw ModelError("sketch state space exceeds " + std::to_string(_options.max_states) + " valuations");
            }
            _valuations.push_back(v);
        }
        return it->second;
    }

    /// Assignments to `holes` in mixed radix, first hole most significant.
    PartialAssignment decode(const std::vector<HoleId>& holes, std::size_t index) const {
        PartialAssignment a(_radix.size());
        for (std::size_t k = holes.size(); k-- > 0;) {
            a[holes[k]] = index % _radix[holes[k]];
            index /= _radix[holes[k]];
        }
        return a;
    }

    std::size_t combinations(const std::vector<HoleId>& holes) const {
        std::size_t n = 1;
        for (HoleId h : holes) {
            n *= _radix[h];
            if (n > _options.max_states) {
                throw ModelError("hole combinations read by one state exceed " + std::to_string(_options.max_states));
            }
        }
        return n;
    }

    Valuation apply(const Command& cmd, std::size_t branch, const Valuation& v, const PartialAssignment& a) {
        Valuation next = v;
        for (const auto& asg : cmd.branches[branch].update) {
            std::int64_t value = as_int(eval_expr(_prog, asg.value, v, a));
            const auto& decl = _prog.variables[asg.variable];
            if (value < decl.low || value > decl.high) {
                throw SketchError("update sets '" + decl.name + "' to " + std::to_string(value) + " outside [" +
                                      std::to_string(decl.low) + ".." + std::to_string(decl.high) + "] from " +
                                      describe(_prog, v),
                                  asg.value.pos);
            }
            next[asg.variable] = value;
        }
        return next;
    }

    /// Drops holes the table does not depend on; a constant table becomes fixed.
    Target reduce(HoleTarget t) const {
        for (std::size_t k = t.holes.size(); k-- > 0;) {
            std::size_t stride = 1;
            for (std::size_t j = k + 1; j < t.holes.size(); ++j) {
                stride *= _radix[t.holes[j]];
            }
            std::size_t r = _radix[t.holes[k]];
            bool irrelevant = true;
            for (std::size_t i = 0; i < t.table.size() && irrelevant; ++i) {
                std::size_t digit = (i / stride) % r;
                if (digit != 0) {
                    irrelevant = t.table[i] == t.table[i - digit * stride];
                }
            }
            if (!irrelevant) {
                continue;
            }
            std::vector<StateIndex> table;
            for (std::size_t i = 0; i < t.table.size(); ++i) {
                if ((i / stride) % r == 0) {
                    table.push_back(t.table[i]);
                }
            }
            t.table = std::move(table);
            t.holes.erase(t.holes.begin() + static_cast<std::ptrdiff_t>(k));
        }
        if (t.holes.empty()) {
            return FixedTarget{t.table.front()};
        }
        return t;
    }

    std::vector<Branch> build_row(const Valuation v) {
        std::vector<std::size_t> candidates;
        std::set<HoleId> guard_union;
        for (std::size_t c = 0; c < _prog.commands.size(); ++c) {
            const auto& gh = _guard_holes[c];
            std::size_t n = combinations(gh);
            for (std::size_t i = 0; i < n; ++i) {
                if (as_bool(eval_expr(_prog, _prog.commands[c].guard, v, decode(gh, i)))) {
                    candidates.push_back(c);
                    guard_union.insert(gh.begin(), gh.end());
                    break;
                }
            }
        }
        if (candidates.empty()) {
            throw ModelError("no command enabled in reachable state " + describe(_prog, v));
        }
        std::vector<HoleId> g(guard_union.begin(), guard_union.end());
        std::size_t n = combinations(g);
        std::vector<std::size_t> chosen(n);
        for (std::size_t i = 0; i < n; ++i) {
            PartialAssignment a = decode(g, i);
            std::vector<std::size_t> enabled;
            for (std::size_t c : candidates) {
                if (as_bool(eval_expr(_prog, _prog.commands[c].guard, v, a))) {
                    enabled.push_back(c);
                }
            }
            if (enabled.empty()) {
                throw ModelError("no command enabled in reachable state " + describe(_prog, v) +
                                 guard_context(g, a));
            }
            if (enabled.size() > 1) {
                const auto& p1 = _prog.commands[enabled[0]].pos;
                const auto& p2 = _prog.commands[enabled[1]].pos;
                throw SketchError("overlapping guards: commands at lines " + std::to_string(p1.line) + " and " +
                                      std::to_string(p2.line) + " both enabled in state " + describe(_prog, v) +
                                      guard_context(g, a),
                                  p2);
            }
            chosen[i] = enabled.front();
        }

        std::set<std::size_t> distinct(chosen.begin(), chosen.end());
        std::vector<Branch> row;
        if (distinct.size() == 1) {
            std::size_t c = chosen.front();
            const auto& info = _commands[c];
            for (std::size_t k = 0; k < info.branches.size(); ++k) {
                const auto& holes = info.update_holes[k];
                HoleTarget t{holes, {}};
                std::size_t m = combinations(holes);
                for (std::size_t i = 0; i < m; ++i) {
                    t.table.push_back(intern(apply(_prog.commands[c], info.branches[k], v, decode(holes, i))));
                }
                row.push_back({info.probabilities[k], reduce(std::move(t))});
            }
            return row;
        }

        // Several commands depending on guard holes: split [0,1) at every
        // cumulative breakpoint and pick, per interval and guard combination,
        // the branch covering that interval.
        std::vector<double> cuts;
        for (std::size_t c : distinct) {
            double acc = 0.0;
            const auto& probs = _commands[c].probabilities;
            for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
                acc += probs[k];
                cuts.push_back(acc);
            }
        }
        std::sort(cuts.begin(), cuts.end());
        std::vector<double> bounds{0.0};
        for (double x : cuts) {
            if (x - bounds.back() > 1e-12 && 1.0 - x > 1e-12) {
                bounds.push_back(x);
            }
        }
        bounds.push_back(1.0);
        for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
            double mid = 0.5 * (bounds[j] + bounds[j + 1]);
            auto branch_at = [&](std::size_t c) {
                const auto& probs = _commands[c].probabilities;
                double acc = 0.0;
                for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
                    acc += probs[k];
                    if (mid < acc) {
                        return k;
                    }
                }
                return probs.size() - 1;
            };
            std::set<HoleId> holes(g.begin(), g.end());
            for (std::size_t c : distinct) {
                const auto& uh = _commands[c].update_holes[branch_at(c)];
                holes.insert(uh.begin(), uh.end());
            }
            HoleTarget t{std::vector<HoleId>(holes.begin(), holes.end()), {}};
            std::size_t m = combinations(t.holes);
            for (std::size_t i = 0; i < m; ++i) {
                PartialAssignment a = decode(t.holes, i);
                std::size_t gi = 0;
                for (HoleId h : g) {
                    gi = gi * _radix[h] + *a[h];
                }
                std::size_t c = chosen[gi];
                t.table.push_back(intern(apply(_prog.commands[c], _commands[c].branches[branch_at(c)], v, a)));
            }
            row.push_back({bounds[j + 1] - bounds[j], reduce(std::move(t))});
        }
        return row;
    }

    std::string guard_context(const std::vector<HoleId>& g, const PartialAssignment& a) const {
        if (g.empty()) {
            return "";
        }
        std::string out = " when ";
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (k > 0) {
                out += ",";
            }
            const auto& h = _prog.holes[g[k]];
            out += h.name + "=" + option_label(_prog, h.options[*a[g[k]]]);
        }
        return out;
    }

    const SketchProgram& _prog;
    ElaborationOptions _options;
    std::vector<std::size_t> _radix;
    std::vector<std::vector<HoleId>> _guard_holes;
    std::vector<CommandInfo> _commands;
    std::map<Valuation, StateIndex> _index;
    std::vector<Valuation> _valuations;
    std::vector<std::vector<Branch>> _rows;
};

} // namespace

void type_check(const SketchProgram& prog) {
    const TypeContext option_ctx{true, false, false, "option expression"};
    for (const auto& h : prog.holes) {
        for (const auto& o : h.options) {
            if (type_of(o.value, option_ctx) != Type::Int) {
                throw SketchError("option of hole '" + h.name + "' must be an integer expression", o.value.pos);
            }
        }
    }
    const TypeContext guard_ctx{true, true, false, "guard"};
    const TypeContext update_ctx{true, true, false, "update"};
    const TypeContext prob_ctx{false, false, true, "probability"};
    for (const auto& cmd : prog.commands) {
        if (type_of(cmd.guard, guard_ctx) != Type::Bool) {
            throw SketchError("guard must be a boolean expression", cmd.guard.pos);
        }
        for (const auto& b : cmd.branches) {
            if (!numeric(type_of(b.probability, prob_ctx))) {
                throw SketchError("probability must be numeric", b.probability.pos);
            }
            std::set<std::size_t> assigned;
            for (const auto& a : b.update) {
                if (!assigned.insert(a.variable).second) {
                    throw SketchError("variable '" + prog.variables[a.variable].name + "' updated twice",
                                      a.value.pos);
                }
                if (type_of(a.value, update_ctx) != Type::Int) {
                    throw SketchError("update value must be an integer expression", a.value.pos);
                }
            }
        }
    }
}

Value eval_expr(const SketchProgram& prog, const Expr& e, const Valuation& valuation,
                const PartialAssignment& assignment) {
    using K = Expr::Kind;
    auto sub = [&](std::size_t i) { return eval_expr(prog, e.args[i], valuation, assignment); };
    switch (e.kind) {
    case K::IntLiteral:
        return e.int_value;
    case K::BoolLiteral:
        return e.bool_value;
    case K::Variable:
        return valuation.at(e.index);
    case K::HoleRef: {
        if (e.index >= assignment.size() || !assignment[e.index]) {
            throw SketchError("hole '" + prog.holes.at(e.index).name + "' is unassigned", e.pos);
        }
        return eval_expr(prog, prog.holes[e.index].options.at(*assignment[e.index]).value, valuation, assignment);
    }
    case K::Negate:
        return -as_int(sub(0));
    case K::Not:
        return !as_bool(sub(0));
    case K::Add:
        return as_int(sub(0)) + as_int(sub(1));
    case K::Sub:
        return as_int(sub(0)) - as_int(sub(1));
    case K::Mul:
        return as_int(sub(0)) * as_int(sub(1));
    case K::Eq:
        return sub(0) == sub(1);
    case K::Ne:
        return sub(0) != sub(1);
    case K::Lt:
        return as_int(sub(0)) < as_int(sub(1));
    case K::Le:
        return as_int(sub(0)) <= as_int(sub(1));
    case K::Gt:
        return as_int(sub(0)) > as_int(sub(1));
    case K::Ge:
        return as_int(sub(0)) >= as_int(sub(1));
    case K::And:
        return as_bool(sub(0)) && as_bool(sub(1));
    case K::Or:
        return as_bool(sub(0)) || as_bool(sub(1));
    case K::Implies:
        return !as_bool(sub(0)) || as_bool(sub(1));
    case K::Iff:
        return as_bool(sub(0)) == as_bool(sub(1));
    default:
        throw SketchError("expression cannot be evaluated to an integer or boolean", e.pos);
    }
}

double eval_probability(const Expr& e) {
    using K = Expr::Kind;
    switch (e.kind) {
    case K::IntLiteral:
        return static_cast<double>(e.int_value);
    case K::RealLiteral:
        return e.real_value;
    case K::Negate:
        return -eval_probability(e.args[0]);
    case K::Add:
        return eval_probability(e.args[0]) + eval_probability(e.args[1]);
    case K::Sub:
        return eval_probability(e.args[0]) - eval_probability(e.args[1]);
    case K::Mul:
        return eval_probability(e.args[0]) * eval_probability(e.args[1]);
    case K::Div: {
        double d = eval_probability(e.args[1]);
        if (d == 0.0) {
            throw SketchError("division by zero in probability", e.pos);
        }
        return eval_probability(e.args[0]) / d;
    }
    case K::HoleRef:
        throw SketchError("probabilities may not depend on holes", e.pos);
    case K::Variable:
        throw SketchError("probabilities must be constant", e.pos);
    default:
        throw SketchError("probability must be a numeric expression", e.pos);
    }
}

ElaboratedSketch elaborate(const SketchProgram& prog, const ElaborationOptions& options) {
    type_check(prog);
    return Elaborator(prog, options).run();
}

StateSet goal_states(const SketchProgram& prog, const ElaboratedSketch& sketch, const Expr& goal) {
    if (type_of(goal, TypeContext{true, false, false, "goal predicate"}) != Type::Bool) {
        throw SketchError("goal must be a boolean expression", goal.pos);
    }
    StateSet out(sketch.valuations.size());
    for (std::size_t s = 0; s < sketch.valuations.size(); ++s) {
        if (as_bool(eval_expr(prog, goal, sketch.valuations[s], {}))) {
            out.insert(static_cast<StateIndex>(s));
        }
    }
    return out;
}

StateSet goal_states(const SketchProgram& prog, const ElaboratedSketch& sketch, std::string_view goal) {
    return goal_states(prog, sketch, parse_expression(goal, prog));
}

} // namespace chainsynth::sketch
