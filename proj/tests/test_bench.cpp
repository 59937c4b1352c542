#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "patchlens/bench.hpp"
#include "patchlens/cluster.hpp"
#include "patchlens/errors.hpp"

using namespace patchlens;
using namespace patchlens::bench;
namespace fs = std::filesystem;

namespace {

const fs::path kCorpus = PATCHLENS_CORPUS_DIR;

std::string slurp(const fs::path& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

// Copy of a corpus bug in a scratch directory, for corrupting.
fs::path scratch_copy(const std::string& bug, const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("patchlens_bench_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  fs::copy(kCorpus / bug, dir);
  return dir;
}

}  // namespace

TEST_CASE("bundled corpus meets its construction rules") {
  auto corpus = load_corpus(kCorpus);
  REQUIRE(corpus.size() >= 10);
  std::set<std::string> causes;
  for (const auto& b : corpus) {
    INFO(b.id);
    causes.insert(b.root_cause);
    CHECK(b.patches.size() >= 8);
    CHECK(b.patches.at(b.correct_patch_id).original_rank >= 3);
    auto plausible = filter_plausible(*b.program, b.patches, b.tests);
    CHECK(plausible.plausible.size() == b.patches.size());
    CHECK_FALSE(passes_all(*b.program, b.tests));
  }
  for (const char* c : {"integer overflow", "wrong argument", "wrong condition"}) CHECK(causes.count(c));
  for (std::size_t i = 1; i < corpus.size(); ++i) CHECK(corpus[i - 1].id < corpus[i].id);
}

TEST_CASE("patches.json files regenerate byte for byte") {
  for (const auto& entry : fs::directory_iterator(kCorpus)) {
    if (!entry.is_directory()) continue;
    INFO(entry.path().filename().string());
    auto src = load_sources(entry.path());
    auto meta = read_meta(entry.path() / "meta.json");
    MutationConfig config;
    config.correct_replacement = meta.correct_replacement;
    auto patches = generate_patches(*src.program, meta.buggy_line, src.tests, config, 7);
    CHECK(patches_to_json(patches).dump(2) + "\n" == slurp(entry.path() / "patches.json"));
  }
}

TEST_CASE("generation is deterministic per seed and places the fix at rank three or later") {
  auto src = load_sources(kCorpus / "math30");
  MutationConfig config;
  config.correct_replacement = "let n1n2prod: float = n1 * n2;";
  auto a = generate_patches(*src.program, 47, src.tests, config, 1);
  auto b = generate_patches(*src.program, 47, src.tests, config, 1);
  CHECK(patches_to_json(a) == patches_to_json(b));
  for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
    auto ps = generate_patches(*src.program, 47, src.tests, config, seed);
    CHECK_NOTHROW(ps.validate());
    bool found = false;
    double prev = 2.0;
    for (const auto& p : ps.patches) {
      CHECK(*p.apr_score <= prev);
      prev = *p.apr_score;
      if (p.replacement_text == *config.correct_replacement) {
        found = true;
        CHECK(p.original_rank >= 3);
      }
    }
    CHECK(found);
  }
}

TEST_CASE("mutants exclude the original and duplicates") {
  auto src = load_sources(kCorpus / "math30");
  auto mutants = mutate_statement(*src.program, 47, 2);
  CHECK(mutants.size() > 20);
  std::set<TokenSeq> seen;
  auto original = tokenize(src.program->line_text(47));
  for (const auto& m : mutants) {
    auto t = tokenize(m);
    CHECK(t != original);
    CHECK(seen.insert(t).second);
  }
  auto first = mutate_statement(*src.program, 47, 1);
  CHECK(first.size() < mutants.size());
  for (const char* expect : {"let n1n2prod: float = n1 * n2;", "let n1n2prod: int = n1 + n2;", "let n1n2prod: int = n2 * n1;"})
    CHECK(std::find(first.begin(), first.end(), expect) != first.end());
}

TEST_CASE("condition mutants keep the header shape") {
  auto src = load_sources(kCorpus / "grade_boundary");
  auto meta = read_meta(kCorpus / "grade_boundary" / "meta.json");
  for (const auto& m : mutate_statement(*src.program, meta.buggy_line, 1)) {
    CHECK(m.rfind("if (", 0) == 0);
    CHECK(m.back() == '{');
  }
  auto elif = load_sources(kCorpus / "grade_boundary");
  auto muts = mutate_statement(*elif.program, 4, 1);
  REQUIRE_FALSE(muts.empty());
  CHECK(muts[0].rfind("} else if (", 0) == 0);
}

TEST_CASE("ranks of the motivating bug") {
  auto bug = load_bug(kCorpus / "math30");
  auto r = rank_bug(bug);
  CHECK(r.original == bug.patches.at(bug.correct_patch_id).original_rank);
  auto sim = cluster::rank_representatives(
      [&] {
        std::vector<std::string> ids;
        for (const auto& p : bug.patches.patches) ids.push_back(p.id);
        return ids;
      }(),
      bug.buggy_context(), bug.patches);
  int pos = 0;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    if (sim[i].patch_id == bug.correct_patch_id) pos = static_cast<int>(i) + 1;
  }
  CHECK(r.similarity_only == pos);
  CHECK(r.ifix >= 1);
  CHECK(r.patch_count == bug.patches.size());
}

TEST_CASE("report means are arithmetic means") {
  auto corpus = load_corpus(kCorpus);
  auto report = evaluate_ranking(corpus);
  double o = 0, s = 0, f = 0;
  for (const auto& b : report.bugs) {
    o += b.original;
    s += b.similarity_only;
    f += b.ifix;
  }
  double n = static_cast<double>(report.bugs.size());
  CHECK(report.mean_original == doctest::Approx(o / n));
  CHECK(report.mean_similarity_only == doctest::Approx(s / n));
  CHECK(report.mean_ifix == doctest::Approx(f / n));
  auto j = report_to_json(report);
  CHECK(j["mean"]["original"] == report.mean_original);
  CHECK(j["bugs"].size() == report.bugs.size());
  CHECK(report_to_text(report).find("math30") != std::string::npos);
}

TEST_CASE("patch and meta JSON validation") {
  using nlohmann::json;
  CHECK_THROWS_AS(patches_from_json(json::object()), FormatError);
  CHECK_THROWS_AS(patches_from_json(json::parse(R"([{"id":"p1","target_line":1,"replacement":"x;","apr_score":1.5,"original_rank":1}])")),
                  FormatError);
  CHECK_THROWS_AS(patches_from_json(json::parse(R"([{"id":"p1","target_line":1,"replacement":"x;","original_rank":0}])")),
                  FormatError);
  auto ps = patches_from_json(json::parse(
      R"([{"id":"b","target_line":1,"replacement":"y;","original_rank":2},{"id":"a","target_line":1,"replacement":"x;","apr_score":0.5,"original_rank":1}])"));
  CHECK(ps.patches[0].id == "a");
  CHECK_FALSE(ps.patches[1].apr_score);
  CHECK(patches_from_json(patches_to_json(ps)).patches == ps.patches);
  CHECK_THROWS_AS(meta_from_json(json::parse(R"({"buggy_line": 3})")), FormatError);
}

TEST_CASE("load_bug rejects broken bugs") {
  CHECK_THROWS_AS(load_bug(kCorpus / "no_such_bug"), CorpusError);
  CHECK_THROWS_AS(load_corpus(kCorpus / "no_such_dir"), CorpusError);

  auto dir = scratch_copy("math30", "syntax");
  spit(dir / "program.mini", slurp(dir / "program.mini") + "\nfn broken( {\n");
  CHECK_THROWS_AS(load_bug(dir), CorpusError);

  dir = scratch_copy("math30", "unknown_correct");
  auto meta = read_meta(dir / "meta.json");
  meta.correct_patch_id = "p99";
  spit(dir / "meta.json", meta_to_json(meta).dump(2));
  CHECK_THROWS_AS(load_bug(dir), CorpusError);

  dir = scratch_copy("math30", "implausible");
  auto ps = read_patches(dir / "patches.json");
  ps.patches[0].replacement_text = "let n1n2prod: int = 0;";
  write_patches(dir / "patches.json", ps);
  try {
    load_bug(dir);
    FAIL("implausible patch accepted");
  } catch (const CorpusError& e) {
    CHECK(std::string(e.what()).find("not plausible") != std::string::npos);
  }

  dir = scratch_copy("math30", "passing");
  meta = read_meta(dir / "meta.json");
  auto fixed = read_patches(dir / "patches.json").at(meta.correct_patch_id).replacement_text;
  auto text = slurp(dir / "program.mini");
  text.replace(text.find("let n1n2prod: int = n1 * n2;"), std::string("let n1n2prod: int = n1 * n2;").size(), fixed);
  spit(dir / "program.mini", text);
  CHECK_THROWS_AS(load_bug(dir), CorpusError);
}

TEST_CASE("generation without any plausible candidate fails") {
  // f returns 0 whatever line 2 computes, so no mutant can pass.
  fs::path dir = fs::temp_directory_path() / "patchlens_bench_hopeless";
  fs::remove_all(dir);
  fs::create_directories(dir);
  spit(dir / "program.mini", "fn f(x: int) -> int {\n    let y: int = x + 1;\n    return y - y;\n}\n");
  spit(dir / "tests.mini", "fn test_f() {\n    assert(f(3) == 1, \"never\");\n}\n");
  auto src = load_sources(dir);
  CHECK_THROWS_AS(generate_patches(*src.program, 2, src.tests, MutationConfig{}, 1), NoPlausiblePatch);
}
