#pragma once

#include "chainsynth/sketch/ast.hpp"

#include <string_view>

namespace chainsynth::sketch {

/// Parses a sketch:
///
///   program    := holedecl* constraint* module
///   holedecl   := "hole" (IDENT | "@"IDENT"@") "either" "{" option ("," option)* "}"
///   option     := [IDENT "is"] expr ["cost" NAT]
///   constraint := "constraint" formula-over-option-names [";"]
///   module     := "module" IDENT vardecl* command* "endmodule"
///   vardecl    := IDENT ":" "[" INT ".." INT "]" "init" INT ";"
///   command    := ["[" [IDENT] "]"] guard "->" branch ("+" branch)* [";"]
///   branch     := [probexpr ":"] update
///   update     := "true" | assign ("&" assign)*
///   assign     := IDENT "'" "=" expr | "(" IDENT "'" "=" expr ")"
///
/// Hole references are written `@name@`; `//` starts a comment.
[[nodiscard]] SketchProgram parse(std::string_view text);

/// Parses a stand-alone boolean or integer expression over the program's
/// variables, e.g. a goal predicate `s=4`.
[[nodiscard]] Expr parse_expression(std::string_view text, const SketchProgram& context);

} // namespace chainsynth::sketch
