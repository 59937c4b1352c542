// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// PATCHLENS_WRITE_GOLDEN=1 rewrites the end-to-end golden file instead of comparing.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>

#include "patchlens/bench.hpp"
#include "patchlens/cluster.hpp"
#include "patchlens/dataflow.hpp"
#include "patchlens/errors.hpp"
#include "patchlens/minilang/interpreter.hpp"
#include "patchlens/minilang/parser.hpp"
#include "patchlens/minilang/value.hpp"
#include "patchlens/pipeline.hpp"
#include "patchlens/service.hpp"
#include "patchlens/tracealign.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace patchlens;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kCorpus = PATCHLENS_CORPUS_DIR;
const fs::path kGolden = fs::path(PATCHLENS_GOLDEN_DIR) / "math30_tables.json";

// Collects failed expectations of one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 10) failures.push_back(what);
  }
};

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const std::vector<bench::BugCase>& corpus() {
  static const auto c = bench::load_corpus(kCorpus);
  return c;
}

// ---- 1 ----
void levenshtein_oracle(Check& c) {
  gen::Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    auto a = gen::tokens(rng, 20), b = gen::tokens(rng, 20);
    c.expect(levenshtein(a, b) == oracle::levenshtein(a, b), "mismatch with reference DP at pair " + std::to_string(i));
  }
  for (int i = 0; i < 10000; ++i) {
    auto a = gen::tokens(rng), b = gen::tokens(rng), x = gen::tokens(rng);
    std::size_t ab = levenshtein(a, b), ba = levenshtein(b, a);
    c.expect(ab == ba, "symmetry");
    c.expect((ab == 0) == (a == b), "identity of indiscernibles");
    c.expect(levenshtein(a, x) <= ab + levenshtein(b, x), "triangle inequality");
  }
}

// ---- 2 ----
void wrapping_oracle(Check& c) {
  using namespace minilang;
  gen::Rng rng(2);
  std::uniform_int_distribution<std::int32_t> any(std::numeric_limits<std::int32_t>::min(),
                                                  std::numeric_limits<std::int32_t>::max());
  for (int i = 0; i < 10000; ++i) {
    std::int32_t a = any(rng), b = any(rng);
    c.expect(wrap_add(a, b) == oracle::wrap64(std::int64_t{a} + b), "add");
    c.expect(wrap_sub(a, b) == oracle::wrap64(std::int64_t{a} - b), "sub");
    c.expect(wrap_mul(a, b) == oracle::wrap64(std::int64_t{a} * b), "mul");
    if (b == 0) b = 1;
    c.expect(wrap_div(a, b) == oracle::wrap64(std::int64_t{a} / b), "div");
    c.expect(wrap_mod(a, b) == oracle::wrap64(std::int64_t{a} % b), "mod");
  }
  c.expect(oracle::wrap64(std::int64_t{2250000} * 3001) == -1837684592, "oracle fixture");
  auto program = parse("fn f(n1: int, n2: int) -> int {\n    let p: int = n1 * n2;\n    return p * (n1 + n2 + 1);\n}\n");
  ParseOptions o;
  o.file = "tests.mini";
  o.externs = &program;
  auto tests = parse("fn test_p() {\n    print(f(1500, 1500));\n}\n", o);
  auto out = run_test(program, discover_tests(tests)[0]);
  c.expect(out.output == "-1837684592\n", "interpreter computes 2250000*3001 as " + out.output);
}

// ---- 3 ----
bool defines(const minilang::Stmt& s) {
  using minilang::StmtKind;
  return s.kind == StmtKind::Let || s.kind == StmtKind::Assign || s.kind == StmtKind::IndexAssign ||
         s.kind == StmtKind::For;
}

void dataflow_oracle(Check& c) {
  gen::Rng rng(3);
  int compared = 0;
  for (int round = 0; round < 200; ++round) {
    gen::ProgramGen g(rng, 50, 6);
    auto p = minilang::parse(g.function());
    const auto& f = p.functions[0];
    for (const auto& [line, stmt] : p.line_index) {
      if (!defines(*stmt)) continue;
      auto got = dataflow::affected_by_statement(*stmt, f);
      auto want = oracle::closure_by_paths(f, line);
      c.expect(got.variables == want.variables && got.use_lines == want.use_lines,
               "random program " + std::to_string(round) + " seed line " + std::to_string(line));
      ++compared;
    }
  }
  for (const auto& bug : corpus()) {
    for (const auto& f : bug.program->functions) {
      for (const auto& [line, stmt] : bug.program->line_index) {
        if (bug.program->line_function.at(line) != &f || !defines(*stmt)) continue;
        auto got = dataflow::affected_by_statement(*stmt, f);
        auto want = oracle::closure_by_states(f, line);
        c.expect(got.variables == want.variables && got.use_lines == want.use_lines,
                 bug.id + ":" + std::to_string(line));
        ++compared;
      }
    }
  }
  c.expect(compared > 1000, "too few comparisons: " + std::to_string(compared));
}

// ---- 4 ----
std::string brute_medoid(const std::vector<std::string>& members, const PatchSet& ps) {
  std::string best;
  std::size_t best_sum = SIZE_MAX;
  int best_rank = 0;
  for (const auto& m : members) {
    std::size_t sum = 0;
    for (const auto& o : members)
      sum += oracle::levenshtein(tokenize(ps.at(m).replacement_text), tokenize(ps.at(o).replacement_text));
    int rank = ps.at(m).original_rank;
    if (sum < best_sum || (sum == best_sum && rank < best_rank)) {
      best = m;
      best_sum = sum;
      best_rank = rank;
    }
  }
  return best;
}

void clustering_contracts(Check& c) {
  static const auto buggy_program =
      minilang::parse("fn f(a: int, b: int, c: int, d: int) -> int {\n    let r: int = a + b;\n    return r;\n}\n");
  struct Case {
    std::string name;
    PatchSet patches;
    BuggyContext buggy;
  };
  std::vector<Case> cases;
  for (const auto& bug : corpus()) cases.push_back({bug.id, bug.patches, bug.buggy_context()});
  gen::Rng rng(4);
  for (int i = 0; i < 100; ++i)
    cases.push_back({"random " + std::to_string(i), gen::patch_set(rng, gen::uniform(rng, 1, 30)),
                     BuggyContext::of(buggy_program, 2)});
  for (const auto& k : cases) {
    auto parts = cluster::cut_to_clusters(cluster::build_dendrogram(k.patches));
    c.expect(!parts.empty() && parts.size() <= 5, k.name + ": cluster count " + std::to_string(parts.size()));
    std::vector<std::string> all;
    for (const auto& p : parts) all.insert(all.end(), p.members.begin(), p.members.end());
    std::sort(all.begin(), all.end());
    std::vector<std::string> ids;
    for (const auto& p : k.patches.patches) ids.push_back(p.id);
    std::sort(ids.begin(), ids.end());
    c.expect(all == ids, k.name + ": clusters do not partition the patches");
    for (const auto& p : parts) {
      if (p.members.size() <= 8)
        c.expect(cluster::select_representative(p, k.patches) == brute_medoid(p.members, k.patches),
                 k.name + ": medoid");
    }
    auto base = cluster::sample(k.patches, k.buggy);
    for (int s = 0; s < 3; ++s) {
      PatchSet shuffled = k.patches;
      std::shuffle(shuffled.patches.begin(), shuffled.patches.end(), rng);
      auto again = cluster::sample(shuffled, k.buggy);
      bool same = again.ranked == base.ranked && again.clusters.size() == base.clusters.size();
      for (std::size_t i = 0; same && i < base.clusters.size(); ++i) same = again.clusters[i].members == base.clusters[i].members;
      c.expect(same, k.name + ": sample depends on input order");
    }
  }
}

// ---- 5 ----
void motivating_fixture(Check& c) {
  auto bug = std::make_shared<const bench::BugCase>(bench::load_bug(kCorpus / "math30"));
  // Values the buggy and fixed statements must produce, from first principles.
  const std::int32_t n = 1500;
  const std::int32_t wrapped = oracle::wrap64(std::int64_t{n} * n * (n + n + 1));
  const double buggy_var = wrapped / 12.0;
  const double fixed_var = static_cast<double>(n) * n * (n + n + 1) / 12.0;
  c.expect(buggy_var < 0 && fixed_var > 0, "oracle sanity");

  pipeline::Analyzer analyzer(bug);
  auto tables = analyzer.tables({bug->correct_patch_id});
  std::string text = tracealign::to_json(tables).dump(2) + "\n";
  if (std::getenv("PATCHLENS_WRITE_GOLDEN")) {
    std::ofstream(kGolden, std::ios::binary) << text;
  } else {
    c.expect(fs::exists(kGolden) && slurp(kGolden) == text, "tables differ from " + kGolden.string());
  }

  c.expect(!tables.empty() && tables[0].frame.function == "calculateAsymptoticPValue", "first table is the buggy method");
  bool var_row = false, sqrt_row = false;
  for (const auto& r : tables.empty() ? std::vector<tracealign::Row>{} : tables[0].rows) {
    if (r.display_name == "VarU" && r.kind == minilang::ProbeKind::VarDef) {
      var_row = true;
      c.expect(r.values[0] == minilang::render_float(buggy_var), "buggy VarU " + r.values[0].value_or("absent"));
      c.expect(r.values[1] == minilang::render_float(fixed_var), "patched VarU " + r.values[1].value_or("absent"));
    }
    if (r.display_name == "sqrt(VarU)") {
      sqrt_row = true;
      c.expect(r.values[0] == "NaN", "buggy sqrt is " + r.values[0].value_or("absent"));
      c.expect(r.values[1] == minilang::render_float(std::sqrt(fixed_var)), "patched sqrt " + r.values[1].value_or("absent"));
      c.expect(r.colors[0] == tracealign::Color::Red, "sqrt row buggy cell is not red");
    }
  }
  c.expect(var_row, "no VarU row");
  c.expect(sqrt_row, "no sqrt(VarU) row");
}

// ---- 6 ----
void ranking_experiment(Check& c) {
  auto report = bench::evaluate_ranking(corpus());
  c.expect(report.bugs.size() >= 10, "corpus has " + std::to_string(report.bugs.size()) + " bugs");
  for (const auto& b : corpus()) {
    c.expect(b.patches.size() >= 8, b.id + ": fewer than 8 plausible patches");
    c.expect(b.patches.at(b.correct_patch_id).original_rank >= 3, b.id + ": correct patch ranked above 3");
  }
  std::ostringstream means;
  means << "original " << report.mean_original << ", similarity " << report.mean_similarity_only << ", ifix "
        << report.mean_ifix;
  c.expect(report.mean_ifix <= report.mean_similarity_only, "ifix worse than similarity: " + means.str());
  c.expect(report.mean_similarity_only <= report.mean_original, "similarity worse than original: " + means.str());
  c.expect(report.mean_ifix <= 0.7 * report.mean_original, "ifix above 0.7 x original: " + means.str());
  std::cout << "  means: " << means.str() << "\n";
}

// ---- 7 ----
std::vector<tracealign::ComparisonTable> align_random(gen::Rng& rng, std::vector<minilang::TraceLog>& logs) {
  static const std::vector<std::string> names{"x", "y", "z"};
  static const std::vector<std::string> pool{"1", "2", "3", "NaN"};
  int versions = gen::uniform(rng, 2, 6);
  logs.clear();
  for (int v = 0; v < versions; ++v) {
    minilang::TraceLog log;
    log.version = v == 0 ? "buggy" : "p" + std::to_string(v);
    for (int line = 1; line <= 3; ++line) {
      for (const auto& nm : names) {
        int count = gen::uniform(rng, 0, 4);
        for (int k = 1; k <= count; ++k)
          log.records.push_back({"f", line, k, nm, minilang::ProbeKind::VarDef, gen::pick(rng, pool)});
      }
    }
    logs.push_back(std::move(log));
  }
  tracealign::AlignInput in;
  in.buggy = &logs[0];
  for (std::size_t i = 1; i < logs.size(); ++i) in.patches.push_back(&logs[i]);
  in.frames = {{"f", 3}};
  return tracealign::align(in);
}

std::optional<std::string> value_at(const minilang::TraceLog& log, int line, const std::string& name, int occ) {
  for (const auto& r : log.records) {
    if (r.line == line && r.name == name && r.occurrence == occ) return r.value;
  }
  return std::nullopt;
}

void alignment_rules(Check& c) {
  std::string first;
  for (int run = 0; run < 5; ++run) {
    auto bug = std::make_shared<const bench::BugCase>(bench::load_bug(kCorpus / "math30"));
    pipeline::Analyzer analyzer(bug);
    std::vector<std::string> ids;
    for (const auto& p : bug->patches.patches) ids.push_back(p.id);
    std::string dump = tracealign::to_json(analyzer.tables(ids)).dump();
    if (run == 0) first = dump;
    c.expect(dump == first, "run " + std::to_string(run) + " differs");
  }

  gen::Rng rng(7);
  int rows = 0;
  std::vector<minilang::TraceLog> logs;
  while (rows < 1000) {
    auto tables = align_random(rng, logs);
    for (const auto& r : tables[0].rows) {
      ++rows;
      std::size_t cols = logs.size();
      // Merge spans partition the columns into runs of equal rendered values.
      int next = 0;
      for (const auto& [a, b] : r.merge_spans) {
        c.expect(a == next && b >= a, "span layout");
        for (int k = a; k <= b; ++k) c.expect(r.rendered(k) == r.rendered(a), "unequal values in a span");
        if (a > 0) c.expect(r.rendered(a) != r.rendered(a - 1), "adjacent spans not maximal");
        next = b + 1;
      }
      c.expect(next == static_cast<int>(cols), "spans do not cover the row");
      // Red on the buggy cell iff a present patch value differs from it.
      bool differs = false;
      for (std::size_t k = 1; k < cols; ++k) differs |= r.values[k] && r.values[k] != r.values[0];
      c.expect((r.colors[0] == tracealign::Color::Red) == differs, "color soundness");
      // The rendered occurrence is the first divergent one, or the last.
      auto diverges = [&](int occ) {
        auto base = value_at(logs[0], r.line, r.display_name, occ);
        for (std::size_t v = 1; v < cols; ++v) {
          if (value_at(logs[v], r.line, r.display_name, occ) != base) return true;
        }
        return false;
      };
      int last = 0;
      for (const auto& log : logs) {
        for (const auto& x : log.records) {
          if (x.line == r.line && x.name == r.display_name) last = std::max(last, x.occurrence);
        }
      }
      for (int k = 1; k < r.occurrence; ++k) c.expect(!diverges(k), "earlier divergence skipped");
      c.expect(diverges(r.occurrence) || r.occurrence == last, "rendered occurrence neither divergent nor last");
    }
  }
  std::string name = tracealign::synthesize_name(
      {"Character.codePointAt(input, pos)", "Character.codePointAt(input, 0)", "Character.codePointAt(input, pt)"});
  c.expect(name == "Character.codePointAt(input, *)", "synthesized " + name);
}

// ---- 8 ----
void session_replay(Check& c) {
  service::SessionService svc(corpus());
  gen::Rng rng(8);
  for (const auto& bug : corpus()) {
    for (int seq = 0; seq < 50; ++seq) {
      auto v = svc.create_session(bug.id);
      std::set<std::string> excluded;
      int steps = gen::uniform(rng, 1, 8);
      for (int s = 0; s < steps; ++s) {
        int roll = gen::uniform(rng, 0, 9);
        std::string cluster = "c" + std::to_string(gen::uniform(rng, 1, static_cast<int>(v.clusters.size())));
        try {
          if (roll < 4) {
            v = svc.explore_cluster(v.session_id, cluster);
          } else if (roll < 8) {
            v = svc.exclude_cluster(v.session_id, cluster);
          } else {
            const auto& pick = v.clusters[static_cast<std::size_t>(gen::uniform(rng, 0, static_cast<int>(v.clusters.size()) - 1))];
            svc.select_patch(v.session_id, pick.representative);
            v = svc.view(v.session_id);
          }
        } catch (const EmptyActiveSet&) {
          v = svc.view(v.session_id);
        }
        c.expect(v.clusters.size() <= 5, bug.id + ": more than 5 representatives");
        for (const auto& e : excluded) {
          for (const auto& cl : v.clusters)
            c.expect(std::find(cl.members.begin(), cl.members.end(), e) == cl.members.end(),
                     bug.id + ": excluded patch " + e + " reappeared");
        }
        c.expect(std::includes(v.excluded.begin(), v.excluded.end(), excluded.begin(), excluded.end()) ||
                     [&] {
                       std::set<std::string> now(v.excluded.begin(), v.excluded.end());
                       return std::includes(now.begin(), now.end(), excluded.begin(), excluded.end());
                     }(),
                 bug.id + ": exclusion undone");
        excluded.insert(v.excluded.begin(), v.excluded.end());
      }
      auto replayed = svc.replay(bug.id, v.history);
      auto a = service::to_json(v), b = service::to_json(replayed);
      a.erase("session_id");
      b.erase("session_id");
      c.expect(a == b, bug.id + ": replay of sequence " + std::to_string(seq) + " differs");
    }
  }
}

struct Criterion {
  int number;
  const char* title;
  double limit_seconds;
  std::function<void(Check&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "levenshtein matches the reference DP and is a metric", 10, levenshtein_oracle},
      {2, "int32 wrapping matches 64-bit-then-wrap", 5, wrapping_oracle},
      {3, "affected sets equal the brute-force dependency closure", 30, dataflow_oracle},
      {4, "clustering contracts", 30, clustering_contracts},
      {5, "end-to-end motivating fixture", 5, motivating_fixture},
      {6, "ranking experiment on the bundled corpus", 120, ranking_experiment},
      {7, "alignment determinism and rules", 20, alignment_rules},
      {8, "session replay", 120, session_replay},
  };
  corpus();
  int failed = 0;
  for (const auto& k : criteria) {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      k.body(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > k.limit_seconds) c.failures.push_back("took " + std::to_string(secs) + " s");
    bool ok = c.failures.empty();
    failed += !ok;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << k.number << ": " << k.title << " (" << std::fixed
              << std::setprecision(2) << secs << " s, limit " << std::setprecision(0) << k.limit_seconds << " s)\n";
    for (const auto& f : c.failures) std::cout << "  - " << f << "\n";
  }
  return failed ? 1 : 0;
}
