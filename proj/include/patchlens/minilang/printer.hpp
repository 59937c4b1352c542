#pragma once

#include <string>

#include "patchlens/minilang/ast.hpp"

namespace patchlens::minilang {

// Canonical spelling of an expression: single spaces around binary operators,
// "f(a, b)" for calls, and only the parentheses precedence requires. Probe
// names are canonical spellings, so this is also the identity used to resolve
// subexpression and call probes.
std::string print_expr(const Expr& e);

// The source-line form of a statement: complete text for simple statements
// ("let x: int = a * b;"), and the opening header for compound ones
// ("if (x > 0) {", "for (let i: int = 0; i < n; i = i + 1) {").
std::string print_statement_line(const Stmt& s);

}  // namespace patchlens::minilang
