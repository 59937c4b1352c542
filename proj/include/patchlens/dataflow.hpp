#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "patchlens/minilang/ast.hpp"
#include "patchlens/minilang/interpreter.hpp"
#include "patchlens/minilang/probe.hpp"

namespace patchlens::dataflow {

// Def-use chains of one function. Parameters are defined on the `fn` line.
struct DefUseChains {
  // (variable, defining line) -> lines of the uses that definition may reach.
  std::map<std::pair<std::string, int>, std::set<int>> du;
  // use line -> used variable -> variables defined on that line from it.
  std::map<int, std::map<std::string, std::set<std::string>>> ud;
  // variable -> every line defining it.
  std::map<std::string, std::set<int>> def_lines;

  const std::set<int>& uses_of(const std::string& var, int def_line) const;
};

DefUseChains def_use_analysis(const minilang::FunctionDef& f);

struct Origin {
  std::string from;  // empty for the seed variable
  int line = 0;      // line where the variable was defined from `from`
  friend bool operator==(const Origin&, const Origin&) = default;
};

struct AffectedSet {
  std::set<std::string> variables;
  std::set<int> use_lines;
  std::map<std::string, Origin> origin;
  friend bool operator==(const AffectedSet&, const AffectedSet&) = default;
};

// Variables a statement's definition flows into, by a worklist over the chains.
// A for header counts as defining its loop variable. Throws NoDefinition for
// statements that define nothing.
AffectedSet affected_by_statement(const minilang::Stmt& s, const minilang::FunctionDef& f);
AffectedSet affected_by_statement(const minilang::Stmt& s, const minilang::FunctionDef& f,
                                  const DefUseChains& chains);

struct FrameTrace {
  minilang::StackFrame frame;
  AffectedSet affected;
  // Canonical spellings of the call-site arguments bound to traced callee
  // parameters. Empty for the innermost frame.
  std::vector<std::string> traced_arguments;
  // True when the frame's seed statement defines nothing; `affected` then
  // holds only the variables used on the seed line.
  bool use_only = false;
  // Call at this frame's line whose return value carries the propagation.
  std::string traced_call;
  // Everything a plan should follow in this frame.
  std::set<std::string> traced_variables;
};

// One trace per stack frame, innermost first. `tests` supplies the functions
// of the test unit (the outermost frame).
std::vector<FrameTrace> trace_across_frames(const minilang::CallStack& stack,
                                            const minilang::SourceProgram& program,
                                            const minilang::SourceProgram* tests, int seed_line);

minilang::InstrumentationPlan plan_instrumentation(const std::vector<FrameTrace>& traces,
                                                   const minilang::SourceProgram& program,
                                                   const minilang::SourceProgram* tests);

// Variable names read by an expression.
void collect_vars(const minilang::Expr& e, std::set<std::string>& out);

}  // namespace patchlens::dataflow
