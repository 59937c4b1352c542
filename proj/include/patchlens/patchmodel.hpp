#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "patchlens/minilang/ast.hpp"
#include "patchlens/minilang/interpreter.hpp"

namespace patchlens {

// A single-hunk patch: the whole statement line `target_line` is replaced by
// `replacement_text` (indentation is preserved). For compound statements the
// replacement is the header line including its opening brace.
struct Patch {
  std::string id;
  int target_line = 0;
  std::string replacement_text;
  std::optional<double> apr_score;
  int original_rank = 0;  // 1 = the APR tool's top candidate

  friend bool operator==(const Patch&, const Patch&) = default;
};

// Patches in original APR order.
struct PatchSet {
  std::vector<Patch> patches;

  std::size_t size() const { return patches.size(); }
  bool empty() const { return patches.empty(); }
  const Patch* find(std::string_view id) const;
  const Patch& at(std::string_view id) const;  // throws UnknownPatch
  // Ids unique and original ranks exactly 1..n; throws CorpusError otherwise.
  void validate() const;
};

struct BuggyContext {
  const minilang::SourceProgram* program = nullptr;
  int buggy_line = 0;
  std::string buggy_statement_text;

  static BuggyContext of(const minilang::SourceProgram& program, int buggy_line);
};

using TokenSeq = std::vector<std::string>;

// MiniLang lexemes with whitespace and comments dropped.
TokenSeq tokenize(std::string_view text);

// Unit-cost token edit distance.
std::size_t levenshtein(const TokenSeq& a, const TokenSeq& b);

// Throws PatchParseError when the patched program does not parse or check.
minilang::SourceProgram apply_patch(const minilang::SourceProgram& program, const Patch& patch);

struct Rejection {
  std::string patch_id;
  std::string reason;
};

struct FilterResult {
  PatchSet plausible;
  std::vector<Rejection> rejected;
};

// Keeps the candidates under which every test passes, in input order.
// Candidates that fail to apply land in `rejected` with the parse error.
FilterResult filter_plausible(const minilang::SourceProgram& program, const PatchSet& candidates,
                              const std::vector<minilang::TestCase>& tests,
                              const minilang::RunLimits& limits = {});

// True when every test passes on `program`.
bool passes_all(const minilang::SourceProgram& program, const std::vector<minilang::TestCase>& tests,
                const minilang::RunLimits& limits = {});

}  // namespace patchlens
