#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "patchlens/dataflow.hpp"
#include "patchlens/errors.hpp"
#include "patchlens/minilang/interpreter.hpp"
#include "patchlens/minilang/parser.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace patchlens;
using namespace patchlens::minilang;
using namespace patchlens::dataflow;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool defines(const Stmt& s) {
  return s.kind == StmtKind::Let || s.kind == StmtKind::Assign || s.kind == StmtKind::IndexAssign ||
         s.kind == StmtKind::For;
}

const char* kLoop =
    "fn f(n: int) -> int {\n"         // 1
    "    let s: int = 0;\n"           // 2
    "    let k: int = n * 2;\n"       // 3
    "    while (s < k) {\n"           // 4
    "        s = s + 1;\n"            // 5
    "    }\n"                         // 6
    "    let t: int = s;\n"           // 7
    "    let u: int = 5;\n"           // 8
    "    return t + u;\n"             // 9
    "}\n";

}  // namespace

TEST_CASE("def-use chains with a loop") {
  auto p = parse(kLoop);
  auto chains = def_use_analysis(p.functions[0]);
  CHECK(chains.uses_of("s", 2) == std::set<int>{4, 5, 7});
  CHECK(chains.uses_of("s", 5) == std::set<int>{4, 5, 7});
  CHECK(chains.uses_of("k", 3) == std::set<int>{4});
  CHECK(chains.uses_of("n", 1) == std::set<int>{3});
  CHECK(chains.uses_of("u", 8) == std::set<int>{9});
  CHECK(chains.ud.at(7).at("s") == std::set<std::string>{"t"});
  CHECK(chains.def_lines.at("s") == std::set<int>{2, 5});
}

TEST_CASE("affected set follows the chains transitively") {
  auto p = parse(kLoop);
  const auto& f = p.functions[0];
  auto a = affected_by_statement(*p.statement_at(2), f);
  CHECK(a.variables == std::set<std::string>{"s", "t"});
  CHECK(a.use_lines == std::set<int>{4, 5, 7, 9});
  CHECK(a.origin.at("s").from.empty());
  CHECK(a.origin.at("t").from == "s");
  CHECK(a.origin.at("t").line == 7);
  auto k = affected_by_statement(*p.statement_at(3), f);
  CHECK(k.variables == std::set<std::string>{"k"});
  CHECK(k.use_lines == std::set<int>{4});
  auto u = affected_by_statement(*p.statement_at(8), f);
  CHECK(u.variables == std::set<std::string>{"u"});
  CHECK(u.use_lines == std::set<int>{9});
  CHECK_THROWS_AS(affected_by_statement(*p.statement_at(9), f), NoDefinition);
}

TEST_CASE("redefinition kills the seed's influence") {
  auto p = parse("fn f(a: int) -> int {\n    let x: int = a;\n    x = 3;\n    let y: int = x;\n    return y;\n}\n");
  auto r = affected_by_statement(*p.statement_at(2), p.functions[0]);
  CHECK(r.variables == std::set<std::string>{"x"});
  CHECK(r.use_lines.empty());
}

TEST_CASE("index assignment and for headers") {
  auto p = parse(
      "fn f(n: int) -> int {\n"
      "    let a: array<int> = fill(n, 0);\n"
      "    for (let i: int = 0; i < n; i = i + 1) {\n"
      "        a[i] = i * 2;\n"
      "    }\n"
      "    let s: int = a[0];\n"
      "    return s;\n"
      "}\n");
  const auto& f = p.functions[0];
  auto head = affected_by_statement(*p.statement_at(3), f);
  CHECK(head.variables == std::set<std::string>{"a", "i", "s"});
  auto arr = affected_by_statement(*p.statement_at(2), f);
  CHECK(arr.variables == std::set<std::string>{"a", "s"});
}

TEST_CASE("affected_by_statement equals the path-enumeration closure on random loop-free programs") {
  gen::Rng rng(2024);
  int compared = 0;
  for (int round = 0; round < 120; ++round) {
    gen::ProgramGen g(rng);
    std::string text = g.function();
    auto p = parse(text);
    const auto& f = p.functions[0];
    for (const auto& [line, stmt] : p.line_index) {
      if (!defines(*stmt)) continue;
      auto got = affected_by_statement(*stmt, f);
      auto want = oracle::closure_by_paths(f, line);
      INFO(text);
      INFO("seed line " << line);
      CHECK(got.variables == want.variables);
      CHECK(got.use_lines == want.use_lines);
      ++compared;
    }
  }
  CHECK(compared > 500);
}

TEST_CASE("the two oracles agree on loop-free programs") {
  gen::Rng rng(8);
  for (int round = 0; round < 30; ++round) {
    gen::ProgramGen g(rng, 25, 4);
    auto p = parse(g.function());
    const auto& f = p.functions[0];
    for (const auto& [line, stmt] : p.line_index) {
      if (!defines(*stmt)) continue;
      auto a = oracle::closure_by_paths(f, line);
      auto b = oracle::closure_by_states(f, line);
      CHECK(a.variables == b.variables);
      CHECK(a.use_lines == b.use_lines);
    }
  }
}

TEST_CASE("affected_by_statement equals the state-exploration closure on corpus functions") {
  int compared = 0;
  for (const auto& entry : std::filesystem::directory_iterator(PATCHLENS_CORPUS_DIR)) {
    if (!entry.is_directory()) continue;
    auto p = parse(slurp(entry.path() / "program.mini"));
    for (const auto& f : p.functions) {
      for (const auto& [line, stmt] : p.line_index) {
        if (p.line_function.at(line) != &f || !defines(*stmt)) continue;
        auto got = affected_by_statement(*stmt, f);
        auto want = oracle::closure_by_states(f, line);
        INFO(entry.path().filename().string() << ":" << line);
        CHECK(got.variables == want.variables);
        CHECK(got.use_lines == want.use_lines);
        ++compared;
      }
    }
  }
  CHECK(compared > 30);
}

TEST_CASE("trace across the frames of the motivating bug") {
  std::filesystem::path dir = std::filesystem::path(PATCHLENS_CORPUS_DIR) / "math30";
  auto program = parse(slurp(dir / "program.mini"));
  ParseOptions o;
  o.file = "tests.mini";
  o.externs = &program;
  auto tests = parse(slurp(dir / "tests.mini"), o);
  auto cases = discover_tests(tests);
  auto stack = capture_call_stack(program, cases[0], 47);
  auto traces = trace_across_frames(stack, program, &tests, 47);
  REQUIRE(traces.size() == 3);

  CHECK(traces[0].frame.function == "calculateAsymptoticPValue");
  CHECK_FALSE(traces[0].use_only);
  for (const char* v : {"n1n2prod", "EU", "VarU", "z"}) CHECK(traces[0].affected.variables.count(v));
  CHECK(traces[0].traced_arguments.empty());

  CHECK(traces[1].frame.function == "mannWhitneyUTest");
  CHECK(traces[1].use_only);
  CHECK(traces[1].traced_call == "calculateAsymptoticPValue(Umin, len(x), len(y))");
  CHECK(traces[1].traced_arguments == std::vector<std::string>{"Umin", "len(x)", "len(y)"});

  CHECK(traces[2].frame.function == "test_big_data_set");
  CHECK(traces[2].affected.variables.count("result"));

  auto plan = plan_instrumentation(traces, program, &tests);
  CHECK(plan.contains(Probe{"calculateAsymptoticPValue", 50, ProbeKind::Call, "sqrt(VarU)", 0}));
  CHECK(plan.contains(Probe{"calculateAsymptoticPValue", 49, ProbeKind::VarDef, "VarU", 0}));
  CHECK(plan.contains(Probe{"calculateAsymptoticPValue", 49, ProbeKind::Subexpr, "n1 + n2 + 1", 0}));
  CHECK(plan.contains(Probe{"test_big_data_set", 8, ProbeKind::VarDef, "result", 0}));
  CHECK_NOTHROW(validate_plan(program, &tests, plan));
}

TEST_CASE("a trace through a function whose return ignores the seed stops there") {
  auto program = parse(
      "fn inner(n: int) -> int {\n"
      "    let waste: int = n * 2;\n"
      "    print(waste);\n"
      "    return 0;\n"
      "}\n"
      "\n"
      "fn outer(n: int) -> int {\n"
      "    let r: int = inner(n);\n"
      "    return r + 1;\n"
      "}\n");
  ParseOptions o;
  o.file = "tests.mini";
  o.externs = &program;
  auto tests = parse("fn test_a() {\n    let v: int = outer(3);\n    assert(v == 1, \"one\");\n}\n", o);
  auto cases = discover_tests(tests);
  auto stack = capture_call_stack(program, cases[0], 2);
  auto traces = trace_across_frames(stack, program, &tests, 2);
  REQUIRE(traces.size() == 3);
  CHECK(traces[0].affected.variables == std::set<std::string>{"waste"});
  CHECK(traces[1].traced_call.empty());
  CHECK(traces[2].traced_call.empty());
}
