#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "patchlens/minilang/ast.hpp"
#include "patchlens/minilang/interpreter.hpp"
#include "patchlens/patchmodel.hpp"

namespace patchlens::bench {

struct BugMeta {
  int buggy_line = 0;
  std::string correct_patch_id;
  std::string root_cause;
  // Intended fix text, used by the generator to guarantee the fix is a candidate.
  std::optional<std::string> correct_replacement;
};

struct BugCase {
  std::string id;
  std::filesystem::path dir;
  std::shared_ptr<const minilang::SourceProgram> program;
  std::shared_ptr<const minilang::SourceProgram> tests_unit;
  std::vector<minilang::TestCase> tests;
  int buggy_line = 0;
  PatchSet patches;
  std::string correct_patch_id;
  std::string root_cause;

  BuggyContext buggy_context() const { return BuggyContext::of(*program, buggy_line); }
};

// JSON shapes of patches.json and meta.json.
nlohmann::json patches_to_json(const PatchSet& patches);
PatchSet patches_from_json(const nlohmann::json& j);  // throws FormatError
nlohmann::json meta_to_json(const BugMeta& meta);
BugMeta meta_from_json(const nlohmann::json& j);  // throws FormatError

PatchSet read_patches(const std::filesystem::path& file);
void write_patches(const std::filesystem::path& file, const PatchSet& patches);
BugMeta read_meta(const std::filesystem::path& file);

struct Sources {
  std::shared_ptr<const minilang::SourceProgram> program;
  std::shared_ptr<const minilang::SourceProgram> tests_unit;
  std::vector<minilang::TestCase> tests;
};

// Parses `<dir>/program.mini` and `<dir>/tests.mini`; throws CorpusError.
Sources load_sources(const std::filesystem::path& dir);

// Loads and validates one bug directory; throws CorpusError naming the bug.
BugCase load_bug(const std::filesystem::path& dir);

// Every bug subdirectory of `path`, sorted by id.
std::vector<BugCase> load_corpus(const std::filesystem::path& path);

struct MutationConfig {
  int max_order = 2;
  std::size_t max_patches = 40;
  // Candidates are tried on the tests in this order; the rest are dropped.
  std::size_t max_candidates = 600;
  std::optional<std::string> correct_replacement;
  int min_correct_rank = 3;
  minilang::RunLimits limits{512, 200'000};
};

// Mutants of the statement at `buggy_line` as replacement lines, sorted and
// free of duplicates by token sequence. The buggy statement itself is omitted.
std::vector<std::string> mutate_statement(const minilang::SourceProgram& program, int buggy_line,
                                          int max_order);

// Throws NoPlausiblePatch when no candidate passes every test.
PatchSet generate_patches(const minilang::SourceProgram& program, int buggy_line,
                          const std::vector<minilang::TestCase>& tests, const MutationConfig& config,
                          std::uint64_t seed);

struct BugRanks {
  std::string bug_id;
  std::string root_cause;
  std::size_t patch_count = 0;
  std::size_t cluster_count = 0;
  int original = 0;
  int similarity_only = 0;
  int ifix = 0;
};

struct RankingReport {
  std::vector<BugRanks> bugs;  // sorted by bug id
  double mean_original = 0.0;
  double mean_similarity_only = 0.0;
  double mean_ifix = 0.0;
};

BugRanks rank_bug(const BugCase& bug, std::size_t max_k = 5);
RankingReport evaluate_ranking(const std::vector<BugCase>& corpus, std::size_t max_k = 5);

nlohmann::json report_to_json(const RankingReport& report);
std::string report_to_text(const RankingReport& report);

}  // namespace patchlens::bench
