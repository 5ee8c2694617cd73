#pragma once

#include "chainsynth/model.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainsynth::sketch {

struct SourcePos {
    std::size_t line = 1;
    std::size_t column = 1;
};

/// Lexical, syntactic or semantic error in a sketch, with its location.
class SketchError : public ModelError {
public:
    SketchError(const std::string& message, SourcePos pos)
        : ModelError(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + message), _pos(pos) {}

    [[nodiscard]] SourcePos position() const { return _pos; }

private:
    SourcePos _pos;
};

struct Expr {
    enum class Kind {
        IntLiteral,
        RealLiteral,
        BoolLiteral,
        Variable,   // index into SketchProgram::variables
        HoleRef,    // index into SketchProgram::holes
        OptionRef,  // constraint atom: (hole, option)
        Negate,
        Not,
        Add,
        Sub,
        Mul,
        Div,
        Eq,
        Ne,
        Lt,
        Le,
        Gt,
        Ge,
        And,
        Or,
        Implies,
        Iff,
    };

    Kind kind = Kind::IntLiteral;
    std::int64_t int_value = 0;
    double real_value = 0.0;
    bool bool_value = false;
    std::size_t index = 0;   // variable or hole
    std::size_t option = 0;  // OptionRef only
    std::string text;        // literal spelling or identifier
    std::vector<Expr> args;
    SourcePos pos;
};

struct OptionDecl {
    std::optional<std::string> name;
    Expr value;
    std::uint64_t cost = 0;
    bool has_cost = false;
    SourcePos pos;
};

struct HoleDecl {
    std::string name;
    std::vector<OptionDecl> options;
    SourcePos pos;
};

struct VariableDecl {
    std::string name;
    std::int64_t low = 0;
    std::int64_t high = 0;
    std::int64_t init = 0;
    SourcePos pos;
};

struct Assignment {
    std::size_t variable = 0;
    Expr value;
};

struct CommandBranch {
    Expr probability;
    /// Empty for the `true` update.
    std::vector<Assignment> update;
};

struct Command {
    Expr guard;
    std::vector<CommandBranch> branches;
    SourcePos pos;
};

struct ConstraintDecl {
    Expr formula;
    SourcePos pos;
};

struct SketchProgram {
    std::vector<HoleDecl> holes;
    std::vector<ConstraintDecl> constraints;
    std::string module_name;
    std::vector<VariableDecl> variables;
    std::vector<Command> commands;
};

/// Label of an option as it appears in realisations: its name when given,
/// otherwise the printed expression.
[[nodiscard]] std::string option_label(const SketchProgram& prog, const OptionDecl& option);

[[nodiscard]] std::string to_string(const SketchProgram& prog, const Expr& e);

/// Prints a program in the concrete syntax accepted by parse().
[[nodiscard]] std::string pretty_print(const SketchProgram& prog);

} // namespace chainsynth::sketch
