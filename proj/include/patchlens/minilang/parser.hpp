#pragma once

#include <string>
#include <string_view>

#include "patchlens/minilang/ast.hpp"

namespace patchlens::minilang {

struct ParseOptions {
  std::string file = "program.mini";
  // Functions of another unit callable from this one (a test file links
  // against the program under test). Must outlive the parse call only.
  const SourceProgram* externs = nullptr;
};

// Parses and statically checks a MiniLang unit. Throws SyntaxError with the
// offending line/column for lexical, grammatical, scoping, and type errors.
SourceProgram parse(std::string_view text, const ParseOptions& options = {});

// Names accepted as calls without a definition.
bool is_builtin(std::string_view name);

}  // namespace patchlens::minilang
