#include "patchlens/patchmodel.hpp"

#include <algorithm>
#include <set>

#include "patchlens/errors.hpp"
#include "patchlens/minilang/lexer.hpp"
#include "patchlens/minilang/parser.hpp"

namespace patchlens {

using minilang::SourceProgram;

const Patch* PatchSet::find(std::string_view id) const {
  for (const auto& p : patches) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const Patch& PatchSet::at(std::string_view id) const {
  const Patch* p = find(id);
  if (!p) throw UnknownPatch("unknown patch '" + std::string(id) + "'");
  return *p;
}

void PatchSet::validate() const {
  std::set<std::string> ids;
  std::vector<int> ranks;
  for (const auto& p : patches) {
    if (!ids.insert(p.id).second) throw CorpusError("duplicate patch id '" + p.id + "'");
    ranks.push_back(p.original_rank);
  }
  std::sort(ranks.begin(), ranks.end());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] != static_cast<int>(i) + 1)
      throw CorpusError("original_rank values must be 1.." + std::to_string(ranks.size()) + " without gaps");
  }
}

BuggyContext BuggyContext::of(const SourceProgram& program, int buggy_line) {
  return BuggyContext{&program, buggy_line, program.line_text(buggy_line)};
}

TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  for (auto& t : minilang::lex(text)) {
    if (t.kind == minilang::TokenKind::End) break;
    out.push_back(std::move(t.lexeme));
  }
  return out;
}

std::size_t levenshtein(const TokenSeq& a, const TokenSeq& b) {
  const TokenSeq& s = a.size() < b.size() ? b : a;
  const TokenSeq& t = a.size() < b.size() ? a : b;
  std::vector<std::size_t> prev(t.size() + 1);
  std::vector<std::size_t> cur(t.size() + 1);
  for (std::size_t j = 0; j <= t.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      std::size_t sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[t.size()];
}

SourceProgram apply_patch(const SourceProgram& program, const Patch& patch) {
  if (!program.statement_at(patch.target_line))
    throw PatchParseError("patch " + patch.id + ": line " + std::to_string(patch.target_line) +
                          " holds no statement");
  if (patch.replacement_text.find('\n') != std::string::npos)
    throw PatchParseError("patch " + patch.id + ": replacement spans several lines");

  const std::string& src = program.source_text;
  std::size_t begin = 0;
  for (int line = 1; line < patch.target_line; ++line) begin = src.find('\n', begin) + 1;
  std::size_t end = src.find('\n', begin);
  if (end == std::string::npos) end = src.size();
  std::size_t indent_end = src.find_first_not_of(" \t", begin);
  if (indent_end == std::string::npos || indent_end > end) indent_end = end;

  std::string text = src.substr(0, indent_end) + patch.replacement_text + src.substr(end);
  minilang::ParseOptions options;
  options.file = program.file;
  try {
    SourceProgram patched = minilang::parse(text, options);
    if (!patched.statement_at(patch.target_line))
      throw PatchParseError("patch " + patch.id + ": replacement is not a statement");
    return patched;
  } catch (const SyntaxError& e) {
    throw PatchParseError("patch " + patch.id + ": " + e.what());
  }
}

bool passes_all(const SourceProgram& program, const std::vector<minilang::TestCase>& tests,
                const minilang::RunLimits& limits) {
  minilang::RunOptions options;
  options.limits = limits;
  for (const auto& t : tests) {
    if (!minilang::run_test(program, t, options).passed()) return false;
  }
  return true;
}

FilterResult filter_plausible(const SourceProgram& program, const PatchSet& candidates,
                              const std::vector<minilang::TestCase>& tests,
                              const minilang::RunLimits& limits) {
  FilterResult result;
  for (const auto& p : candidates.patches) {
    try {
      SourceProgram patched = apply_patch(program, p);
      if (passes_all(patched, tests, limits)) result.plausible.patches.push_back(p);
    } catch (const PatchParseError& e) {
      result.rejected.push_back(Rejection{p.id, e.what()});
    }
  }
  return result;
}

}  // namespace patchlens
