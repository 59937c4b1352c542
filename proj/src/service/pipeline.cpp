#include "patchlens/pipeline.hpp"

#include "patchlens/errors.hpp"

namespace patchlens::pipeline {

Analyzer::Analyzer(std::shared_ptr<const bench::BugCase> bug) : bug_(std::move(bug)) {
  const auto& tests = bug_->tests;
  test_index_ = tests.size();
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (!minilang::run_test(*bug_->program, tests[i]).passed()) {
      test_index_ = i;
      break;
    }
  }
  if (test_index_ == tests.size()) throw PipelineError("trace", "bug " + bug_->id + ": no test fails on the buggy program");
  try {
    stack_ = minilang::capture_call_stack(*bug_->program, test(), bug_->buggy_line);
  } catch (const TargetNotExecuted& e) {
    throw PipelineError("trace", e.what());
  }
}

VersionTrace Analyzer::trace(const minilang::SourceProgram& program, const std::string& version) {
  try {
    auto traces = dataflow::trace_across_frames(stack_, program, bug_->tests_unit.get(), bug_->buggy_line);
    VersionTrace out;
    out.version = version;
    out.plan = dataflow::plan_instrumentation(traces, program, bug_->tests_unit.get());
    auto run = minilang::execute_traced(program, test(), out.plan, version);
    out.log = std::move(run.log);
    out.outcome = std::move(run.outcome);
    return out;
  } catch (const ProbeResolutionError& e) {
    throw PipelineError("instrument", e.what());
  }
}

const VersionTrace& Analyzer::buggy() {
  if (!buggy_) buggy_ = std::make_unique<VersionTrace>(trace(*bug_->program, "buggy"));
  return *buggy_;
}

const VersionTrace& Analyzer::patch(const std::string& patch_id) {
  auto it = patches_.find(patch_id);
  if (it != patches_.end()) return it->second;
  const Patch& p = bug_->patches.at(patch_id);
  minilang::SourceProgram patched = [&] {
    try {
      return apply_patch(*bug_->program, p);
    } catch (const PatchParseError& e) {
      throw PipelineError("apply", e.what());
    }
  }();
  return patches_.emplace(patch_id, trace(patched, patch_id)).first->second;
}

std::vector<tracealign::ComparisonTable> Analyzer::tables(const std::vector<std::string>& patch_ids) {
  tracealign::AlignInput input;
  const VersionTrace& b = buggy();
  input.buggy = &b.log;
  input.plans.push_back(&b.plan);
  for (const auto& id : patch_ids) {
    const VersionTrace& t = patch(id);
    input.patches.push_back(&t.log);
    input.plans.push_back(&t.plan);
  }
  input.frames = stack_.frames;
  for (const auto& f : bug_->program->functions) input.files.emplace_back(f.name, bug_->program->file);
  for (const auto& f : bug_->tests_unit->functions) input.files.emplace_back(f.name, bug_->tests_unit->file);
  try {
    return tracealign::align(input);
  } catch (const AlignmentError& e) {
    throw PipelineError("align", e.what());
  }
}

}  // namespace patchlens::pipeline
