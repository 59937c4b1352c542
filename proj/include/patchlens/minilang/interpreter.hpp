#pragma once

#include <optional>
#include <string>
#include <vector>

#include "patchlens/minilang/ast.hpp"
#include "patchlens/minilang/probe.hpp"

namespace patchlens::minilang {

// A zero-parameter `test_*` function of a test unit. The unit links against
// the program passed to run_test by function name.
struct TestCase {
  std::string name;
  const FunctionDef* body = nullptr;
  const SourceProgram* unit = nullptr;
};

// Every `fn test_*()` of `unit`, in source order. Throws SyntaxError for a
// test function that takes parameters or returns a value.
std::vector<TestCase> discover_tests(const SourceProgram& unit);

struct StackFrame {
  std::string function;
  int line = 0;  // line currently executing in that function
  friend bool operator==(const StackFrame&, const StackFrame&) = default;
};

// Innermost frame first; the last frame is the test body.
struct CallStack {
  std::vector<StackFrame> frames;
  friend bool operator==(const CallStack&, const CallStack&) = default;
};

enum class TestStatus { Pass, Fail };

struct TestOutcome {
  TestStatus status = TestStatus::Pass;
  std::optional<int> failing_line;
  std::string message;
  std::optional<CallStack> call_stack;
  std::string output;  // everything print() wrote

  bool passed() const { return status == TestStatus::Pass; }
  friend bool operator==(const TestOutcome&, const TestOutcome&) = default;
};

struct RunLimits {
  int max_depth = 512;
  long max_steps = 1'000'000;
};

struct RunOptions {
  RunLimits limits;
  // Capture the call stack at the first execution of this line of this file.
  std::optional<int> capture_line;
  std::string capture_file = "program.mini";
};

TestOutcome run_test(const SourceProgram& program, const TestCase& test,
                     const RunOptions& options = {});

// Throws TargetNotExecuted when the test never reaches the line. `file`
// selects the unit the line belongs to (the program, by default).
CallStack capture_call_stack(const SourceProgram& program, const TestCase& test, int target_line,
                             const std::string& file = {});

struct TracedRun {
  TestOutcome outcome;
  TraceLog log;
};

// Checks that every probe names an expression, a variable use, or a
// definition present at its (function, line). Throws ProbeResolutionError.
void validate_plan(const SourceProgram& program, const SourceProgram* tests,
                   const InstrumentationPlan& plan);

TracedRun execute_traced(const SourceProgram& program, const TestCase& test,
                         const InstrumentationPlan& plan, const std::string& version = "buggy",
                         const RunLimits& limits = {});

}  // namespace patchlens::minilang
