#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "patchlens/bench.hpp"
#include "patchlens/dataflow.hpp"
#include "patchlens/tracealign.hpp"

namespace patchlens::pipeline {

// Plan and log of one version's traced run of the failing test.
struct VersionTrace {
  std::string version;
  minilang::InstrumentationPlan plan;
  minilang::TraceLog log;
  minilang::TestOutcome outcome;
};

// Runtime analysis of one bug: the failing test is traced on the buggy
// program and on each requested patch. Results are cached per version.
// Not thread-safe; callers serialize access.
class Analyzer {
 public:
  explicit Analyzer(std::shared_ptr<const bench::BugCase> bug);

  const bench::BugCase& bug() const { return *bug_; }
  // First test that fails on the buggy program.
  const minilang::TestCase& test() const { return bug_->tests[test_index_]; }
  const minilang::CallStack& stack() const { return stack_; }

  const VersionTrace& buggy();
  const VersionTrace& patch(const std::string& patch_id);  // throws UnknownPatch

  // Tables for buggy plus the given patches, in the order given.
  std::vector<tracealign::ComparisonTable> tables(const std::vector<std::string>& patch_ids);

 private:
  VersionTrace trace(const minilang::SourceProgram& program, const std::string& version);

  std::shared_ptr<const bench::BugCase> bug_;
  std::size_t test_index_ = 0;
  minilang::CallStack stack_;
  std::unique_ptr<VersionTrace> buggy_;
  std::map<std::string, VersionTrace> patches_;
};

}  // namespace patchlens::pipeline
