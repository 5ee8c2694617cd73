#include "chainsynth/sketch/ast.hpp"

#include <sstream>

namespace chainsynth::sketch {

namespace {

int precedence(Expr::Kind kind) {
    using K = Expr::Kind;
    switch (kind) {
    case K::Iff:
        return 1;
    case K::Implies:
        return 2;
    case K::Or:
        return 3;
    case K::And:
        return 4;
    case K::Not:
        return 5;
    case K::Eq:
    case K::Ne:
    case K::Lt:
    case K::Le:
    case K::Gt:
    case K::Ge:
        return 6;
    case K::Add:
    case K::Sub:
        return 7;
    case K::Mul:
    case K::Div:
        return 8;
    case K::Negate:
        return 9;
    default:
        return 10;
    }
}

const char* symbol(Expr::Kind kind) {
    using K = Expr::Kind;
    switch (kind) {
    case K::Iff:
        return " <=> ";
    case K::Implies:
        return " => ";
    case K::Or:
        return " | ";
    case K::And:
        return " & ";
    case K::Eq:
        return "=";
    case K::Ne:
        return "!=";
    case K::Lt:
        return "<";
    case K::Le:
        return "<=";
    case K::Gt:
        return ">";
    case K::Ge:
        return ">=";
    case K::Add:
        return " + ";
    case K::Sub:
        return " - ";
    case K::Mul:
        return "*";
    case K::Div:
        return "/";
    default:
        return "?";
    }
}

void print(const SketchProgram& prog, const Expr& e, std::string& out);

void print_child(const SketchProgram& prog, const Expr& child, int min_prec, std::string& out) {
    if (precedence(child.kind) < min_prec) {
        out += '(';
        print(prog, child, out);
        out += ')';
    } else {
        print(prog, child, out);
    }
}

void print(const SketchProgram& prog, const Expr& e, std::string& out) {
    using K = Expr::Kind;
    switch (e.kind) {
    case K::IntLiteral:
        out += e.text.empty() ? std::to_string(e.int_value) : e.text;
        return;
    case K::RealLiteral: {
        if (!e.text.empty()) {
            out += e.text;
        } else {
            std::ostringstream os;
            os.precision(17);
            os << e.real_value;
            out += os.str();
        }
        return;
    }
    case K::BoolLiteral:
        out += e.bool_value ? "true" : "false";
        return;
    case K::Variable:
        out += e.index < prog.variables.size() ? prog.variables[e.index].name : e.text;
        return;
    case K::HoleRef:
        out += '@';
        out += e.index < prog.holes.size() ? prog.holes[e.index].name : e.text;
        out += '@';
        return;
    case K::OptionRef:
        out += prog.holes.at(e.index).options.at(e.option).name.value_or(e.text);
        return;
    case K::Negate:
        out += '-';
        print_child(prog, e.args[0], precedence(K::Negate), out);
        return;
    case K::Not:
        out += '!';
        print_child(prog, e.args[0], precedence(K::Not), out);
        return;
    default:
        break;
    }
    int prec = precedence(e.kind);
    bool right_assoc = e.kind == K::Implies;
    bool comparison = prec == 6;
    // Left-associative operators only need parentheses on an equal-precedence
    // right operand; comparisons never chain.
    int left_min = right_assoc || comparison ? prec + 1 : prec;
    int right_min = right_assoc ? prec : prec + 1;
    print_child(prog, e.args[0], left_min, out);
    out += symbol(e.kind);
    print_child(prog, e.args[1], right_min, out);
}

} // namespace

std::string option_label(const SketchProgram& prog, const OptionDecl& option) {
    return option.name ? *option.name : to_string(prog, option.value);
}

std::string to_string(const SketchProgram& prog, const Expr& e) {
    std::string out;
    print(prog, e, out);
    return out;
}

std::string pretty_print(const SketchProgram& prog) {
    std::string out;
    for (const auto& h : prog.holes) {
        out += "hole @" + h.name + "@ either { ";
        for (std::size_t i = 0; i < h.options.size(); ++i) {
            const auto& o = h.options[i];
            if (i > 0) {
                out += ", ";
            }
            if (o.name) {
                out += *o.name + " is ";
            }
            out += to_string(prog, o.value);
            if (o.has_cost) {
                out += " cost " + std::to_string(o.cost);
            }
        }
        out += " }\n";
    }
    for (const auto& c : prog.constraints) {
        out += "constraint " + to_string(prog, c.formula) + ";\n";
    }
    out += "module " + prog.module_name + "\n";
    for (const auto& v : prog.variables) {
        out += "  " + v.name + " : [" + std::to_string(v.low) + ".." + std::to_string(v.high) + "] init " +
               std::to_string(v.init) + ";\n";
    }
    for (const auto& cmd : prog.commands) {
        out += "  " + to_string(prog, cmd.guard) + " ->";
        for (std::size_t i = 0; i < cmd.branches.size(); ++i) {
            const auto& b = cmd.branches[i];
            out += i == 0 ? " " : " + ";
            out += to_string(prog, b.probability) + ": ";
            if (b.update.empty()) {
                out += "true";
            }
            for (std::size_t k = 0; k < b.update.size(); ++k) {
                if (k > 0) {
                    out += " & ";
                }
                // Parenthesised so a trailing `+` in the value cannot be read
                // as a branch separator.
                out += "(" + prog.variables.at(b.update[k].variable).name + "'=" +
                       to_string(prog, b.update[k].value) + ")";
            }
        }
        out += ";\n";
    }
    out += "endmodule\n";
    return out;
}

} // namespace chainsynth::sketch
