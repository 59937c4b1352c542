#include "patchlens/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "patchlens/cluster.hpp"
#include "patchlens/errors.hpp"
#include "patchlens/minilang/parser.hpp"
#include "patchlens/minilang/printer.hpp"

namespace patchlens::bench {

namespace fs = std::filesystem;
using minilang::Expr;
using minilang::ExprKind;
using minilang::ExprPtr;
using minilang::SourceProgram;
using minilang::Stmt;
using minilang::StmtKind;
using minilang::StmtPtr;
using nlohmann::json;

// ---------------------------------------------------------------------------
// JSON files

json patches_to_json(const PatchSet& patches) {
  json out = json::array();
  for (const auto& p : patches.patches) {
    out.push_back({
        {"id", p.id},
        {"target_line", p.target_line},
        {"replacement", p.replacement_text},
        {"apr_score", p.apr_score ? json(*p.apr_score) : json(nullptr)},
        {"original_rank", p.original_rank},
    });
  }
  return out;
}

PatchSet patches_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("patches: expected a JSON array");
  PatchSet out;
  try {
    for (const auto& e : j) {
      Patch p;
      p.id = e.at("id").get<std::string>();
      p.target_line = e.at("target_line").get<int>();
      p.replacement_text = e.at("replacement").get<std::string>();
      if (e.contains("apr_score") && !e.at("apr_score").is_null()) {
        double s = e.at("apr_score").get<double>();
        if (s < 0.0 || s > 1.0) throw FormatError("patch " + p.id + ": apr_score outside [0, 1]");
        p.apr_score = s;
      }
      p.original_rank = e.at("original_rank").get<int>();
      if (p.original_rank < 1) throw FormatError("patch " + p.id + ": original_rank must be positive");
      out.patches.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("patches: ") + e.what());
  }
  std::stable_sort(out.patches.begin(), out.patches.end(),
                   [](const Patch& a, const Patch& b) { return a.original_rank < b.original_rank; });
  return out;
}

json meta_to_json(const BugMeta& meta) {
  json out = {
      {"buggy_line", meta.buggy_line},
      {"correct_patch_id", meta.correct_patch_id},
      {"root_cause", meta.root_cause},
  };
  if (meta.correct_replacement) out["correct_replacement"] = *meta.correct_replacement;
  return out;
}

BugMeta meta_from_json(const json& j) {
  try {
    BugMeta m;
    m.buggy_line = j.at("buggy_line").get<int>();
    m.correct_patch_id = j.value("correct_patch_id", std::string{});
    m.root_cause = j.at("root_cause").get<std::string>();
    if (j.contains("correct_replacement")) m.correct_replacement = j.at("correct_replacement").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("meta: ") + e.what());
  }
}

namespace {

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw CorpusError("cannot read " + file.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& file) {
  try {
    return json::parse(slurp(file));
  } catch (const json::parse_error& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

}  // namespace

PatchSet read_patches(const fs::path& file) { return patches_from_json(read_json(file)); }

void write_patches(const fs::path& file, const PatchSet& patches) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw CorpusError("cannot write " + file.string());
  out << patches_to_json(patches).dump(2) << "\n";
}

BugMeta read_meta(const fs::path& file) { return meta_from_json(read_json(file)); }

// ---------------------------------------------------------------------------
// Corpus loading

Sources load_sources(const fs::path& dir) {
  Sources s;
  std::string id = dir.filename().string();
  try {
    minilang::ParseOptions po;
    po.file = "program.mini";
    s.program = std::make_shared<const SourceProgram>(minilang::parse(slurp(dir / "program.mini"), po));
    minilang::ParseOptions to;
    to.file = "tests.mini";
    to.externs = s.program.get();
    s.tests_unit = std::make_shared<const SourceProgram>(minilang::parse(slurp(dir / "tests.mini"), to));
    s.tests = minilang::discover_tests(*s.tests_unit);
  } catch (const SyntaxError& e) {
    throw CorpusError("bug " + id + ": " + e.what());
  }
  if (s.tests.empty()) throw CorpusError("bug " + id + ": tests.mini defines no test_ functions");
  return s;
}

BugCase load_bug(const fs::path& dir) {
  BugCase bug;
  bug.id = dir.filename().string();
  bug.dir = dir;
  auto fail = [&](const std::string& why) -> CorpusError { return CorpusError("bug " + bug.id + ": " + why); };
  if (!fs::is_directory(dir)) throw fail("no such directory " + dir.string());

  Sources src = load_sources(dir);
  bug.program = src.program;
  bug.tests_unit = src.tests_unit;
  bug.tests = std::move(src.tests);

  BugMeta meta;
  try {
    meta = read_meta(dir / "meta.json");
    bug.patches = read_patches(dir / "patches.json");
    bug.patches.validate();
  } catch (const CorpusError& e) {
    throw fail(e.what());
  } catch (const FormatError& e) {
    throw fail(e.what());
  }
  bug.buggy_line = meta.buggy_line;
  bug.correct_patch_id = meta.correct_patch_id;
  bug.root_cause = meta.root_cause;

  if (!bug.program->statement_at(bug.buggy_line))
    throw fail("buggy_line " + std::to_string(bug.buggy_line) + " holds no statement");
  if (passes_all(*bug.program, bug.tests)) throw fail("the buggy program passes every test");
  if (bug.patches.empty()) throw fail("no patches");
  if (!bug.patches.find(bug.correct_patch_id))
    throw fail("correct_patch_id '" + bug.correct_patch_id + "' is not among the patches");
  for (const auto& p : bug.patches.patches) {
    if (p.target_line != bug.buggy_line) throw fail("patch " + p.id + " does not target the buggy line");
    try {
      if (!passes_all(apply_patch(*bug.program, p), bug.tests)) {
        if (p.id == bug.correct_patch_id) throw fail("the correct patch " + p.id + " fails a test");
        throw fail("patch " + p.id + " is not plausible");
      }
    } catch (const PatchParseError& e) {
      throw fail(e.what());
    }
  }
  return bug;
}

std::vector<BugCase> load_corpus(const fs::path& path) {
  if (!fs::is_directory(path)) throw CorpusError("corpus directory " + path.string() + " does not exist");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_directory()) continue;
    if (entry.path().filename().string().starts_with(".")) continue;
    dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<BugCase> out;
  for (const auto& d : dirs) out.push_back(load_bug(d));
  return out;
}

// ---------------------------------------------------------------------------
// Mutation

namespace {

// Expressions of a statement's own line, in a fixed pre-order.
void expr_nodes(Expr& e, std::vector<Expr*>& out) {
  out.push_back(&e);
  for (auto& c : e.children) expr_nodes(*c, out);
}

void line_nodes(Stmt& s, std::vector<Expr*>& out) {
  if (s.init) line_nodes(*s.init, out);
  for (auto& i : s.indices) expr_nodes(*i, out);
  if (s.value) expr_nodes(*s.value, out);
  if (s.cond) expr_nodes(*s.cond, out);
  if (s.step) line_nodes(*s.step, out);
}

std::vector<Stmt*> line_statements(Stmt& s) {
  std::vector<Stmt*> out{&s};
  if (s.init) out.push_back(s.init.get());
  if (s.step) out.push_back(s.step.get());
  return out;
}

// Copy of the statement's header without bodies, so mutants stay small.
StmtPtr header_clone(const Stmt& s) {
  auto c = std::make_unique<Stmt>();
  c->kind = s.kind;
  c->line = s.line;
  c->column = s.column;
  c->name = s.name;
  c->declared = s.declared;
  for (const auto& i : s.indices) c->indices.push_back(i->clone());
  if (s.value) c->value = s.value->clone();
  if (s.cond) c->cond = s.cond->clone();
  if (s.init) c->init = s.init->clone();
  if (s.step) c->step = s.step->clone();
  return c;
}

ExprPtr make_int(std::int32_t v) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::IntLit;
  e->int_value = v;
  return e;
}

ExprPtr make_binary(minilang::BinaryOp op, ExprPtr a, ExprPtr b) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Binary;
  e->binary_op = op;
  e->children.push_back(std::move(a));
  e->children.push_back(std::move(b));
  return e;
}

using minilang::BinaryOp;
const std::vector<BinaryOp> kArithmetic{BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Mod};
const std::vector<BinaryOp> kRelational{BinaryOp::Lt, BinaryOp::Le, BinaryOp::Gt,
                                        BinaryOp::Ge, BinaryOp::Eq, BinaryOp::Ne};
const std::vector<BinaryOp> kLogical{BinaryOp::And, BinaryOp::Or};

const std::vector<BinaryOp>& op_class(BinaryOp op) {
  if (minilang::is_arithmetic(op)) return kArithmetic;
  if (minilang::is_relational(op)) return kRelational;
  return kLogical;
}

using Scope = std::vector<minilang::Param>;

// Variables visible on `line`, or nullopt when the line is not in `body`.
std::optional<Scope> scope_at(const std::vector<StmtPtr>& body, int line, Scope scope) {
  for (const auto& s : body) {
    Scope inner = scope;
    if (s->kind == StmtKind::For) inner.push_back({s->init->name, s->init->var_type});
    if (s->line == line) return s->kind == StmtKind::For ? inner : scope;
    if (auto r = scope_at(s->body, line, inner)) return r;
    if (auto r = scope_at(s->else_body, line, scope)) return r;
    if (s->kind == StmtKind::Let) scope.push_back({s->name, s->var_type});
  }
  return std::nullopt;
}

// Every single-operator mutant of `s`.
std::vector<StmtPtr> mutants(const Stmt& s, const Scope& scope) {
  std::vector<StmtPtr> out;
  std::vector<Expr*> probe;
  StmtPtr base = header_clone(s);
  line_nodes(*base, probe);
  std::size_t n = probe.size();
  auto with_node = [&](std::size_t i, auto&& edit) {
    StmtPtr c = header_clone(s);
    std::vector<Expr*> nodes;
    line_nodes(*c, nodes);
    if (edit(nodes[i])) out.push_back(std::move(c));
  };

  for (std::size_t i = 0; i < n; ++i) {
    const Expr& e = *probe[i];
    if (e.kind == ExprKind::Binary) {
      for (BinaryOp op : op_class(e.binary_op)) {
        if (op == e.binary_op) continue;
        with_node(i, [op](Expr* x) {
          x->binary_op = op;
          return true;
        });
      }
      with_node(i, [](Expr* x) {
        std::swap(x->children[0], x->children[1]);
        return true;
      });
      if (minilang::is_relational(e.binary_op)) {
        for (BinaryOp delta : {BinaryOp::Add, BinaryOp::Sub}) {
          with_node(i, [delta](Expr* x) {
            x->children[1] = make_binary(delta, std::move(x->children[1]), make_int(1));
            return true;
          });
        }
      }
    }
    if (e.kind == ExprKind::IntLit) {
      std::int64_t v = e.int_value;
      std::set<std::int64_t> targets{v + 1, v - 1, v * 2, v / 2};
      targets.erase(v);
      for (std::int64_t t : targets) {
        if (t < 0 || t > INT32_MAX) continue;
        with_node(i, [t](Expr* x) {
          x->int_value = static_cast<std::int32_t>(t);
          return true;
        });
      }
    }
    if (e.kind == ExprKind::Var) {
      for (const auto& v : scope) {
        if (v.name == e.text || !(v.type == e.type)) continue;
        with_node(i, [&v](Expr* x) {
          x->text = v.name;
          return true;
        });
      }
    }
    if (e.kind == ExprKind::Call) {
      for (std::size_t a = 0; a + 1 < e.children.size(); ++a) {
        with_node(i, [a](Expr* x) {
          std::swap(x->children[a], x->children[a + 1]);
          return true;
        });
      }
    }
  }

  for (std::size_t k = 0; k < line_statements(*base).size(); ++k) {
    const Stmt& part = *line_statements(*base)[k];
    if (part.kind != StmtKind::Let || !part.declared || part.declared->array_depth != 0) continue;
    auto b = part.declared->base;
    if (b != minilang::BaseType::Int && b != minilang::BaseType::Float) continue;
    StmtPtr c = header_clone(s);
    Stmt& target = *line_statements(*c)[k];
    target.declared->base = b == minilang::BaseType::Int ? minilang::BaseType::Float : minilang::BaseType::Int;
    out.push_back(std::move(c));
  }

  if (s.cond) {
    StmtPtr c = header_clone(s);
    auto neg = std::make_unique<Expr>();
    neg->kind = ExprKind::Unary;
    neg->unary_op = minilang::UnaryOp::Not;
    neg->children.push_back(std::move(c->cond));
    c->cond = std::move(neg);
    out.push_back(std::move(c));
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string join_tokens(const TokenSeq& t) {
  std::string out;
  for (const auto& x : t) out += x + '\x1f';
  return out;
}

}  // namespace

std::vector<std::string> mutate_statement(const SourceProgram& program, int buggy_line, int max_order) {
  const Stmt* s = program.statement_at(buggy_line);
  if (!s) throw CorpusError("line " + std::to_string(buggy_line) + " holds no statement");
  std::string original = program.line_text(buggy_line);
  std::string prefix;
  if (s->kind == StmtKind::If && !original.empty() && original.front() == '}')
    prefix = original.substr(0, original.find("if"));

  const minilang::FunctionDef* fn = program.line_function.at(buggy_line);
  Scope scope = scope_at(fn->body, buggy_line, fn->params).value_or(fn->params);

  std::set<std::string> seen{join_tokens(tokenize(original))};
  std::vector<std::string> out;
  std::vector<StmtPtr> frontier;
  frontier.push_back(header_clone(*s));
  for (int order = 1; order <= max_order; ++order) {
    std::vector<std::pair<std::string, StmtPtr>> level;
    for (const auto& f : frontier) {
      for (auto& m : mutants(*f, scope)) {
        std::string text = prefix + minilang::print_statement_line(*m);
        level.emplace_back(std::move(text), std::move(m));
      }
    }
    std::sort(level.begin(), level.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    frontier.clear();
    for (auto& [text, m] : level) {
      if (!seen.insert(join_tokens(tokenize(text))).second) continue;
      out.push_back(text);
      frontier.push_back(std::move(m));
    }
  }
  return out;
}

PatchSet generate_patches(const SourceProgram& program, int buggy_line,
                          const std::vector<minilang::TestCase>& tests, const MutationConfig& config,
                          std::uint64_t seed) {
  std::vector<std::string> candidates = mutate_statement(program, buggy_line, config.max_order);
  if (candidates.size() > config.max_candidates) candidates.resize(config.max_candidates);
  if (config.correct_replacement &&
      std::find(candidates.begin(), candidates.end(), *config.correct_replacement) == candidates.end())
    candidates.push_back(*config.correct_replacement);

  PatchSet pool;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    pool.patches.push_back(Patch{"c" + std::to_string(i + 1), buggy_line, candidates[i], std::nullopt, 0});
  }
  FilterResult filtered = filter_plausible(program, pool, tests, config.limits);
  if (filtered.plausible.empty())
    throw NoPlausiblePatch("no plausible patch for line " + std::to_string(buggy_line));

  struct Scored {
    Patch patch;
    double score;
  };
  std::vector<Scored> scored;
  for (auto& p : filtered.plausible.patches) {
    std::mt19937_64 rng(seed ^ fnv1a64(p.replacement_text));
    double score = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    scored.push_back(Scored{std::move(p), score});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.patch.replacement_text < b.patch.replacement_text;
  });

  auto is_correct = [&](const Scored& s) {
    return config.correct_replacement && s.patch.replacement_text == *config.correct_replacement;
  };
  auto correct = std::find_if(scored.begin(), scored.end(), is_correct);
  if (correct != scored.end()) {
    std::size_t pos = static_cast<std::size_t>(correct - scored.begin());
    std::size_t floor = static_cast<std::size_t>(std::max(config.min_correct_rank, 1)) - 1;
    std::size_t want = pos;
    if (pos < floor) want = std::min(floor, scored.size() - 1);
    if (pos >= config.max_patches) want = std::max(floor, config.max_patches - 1);
    Scored c = std::move(scored[pos]);
    scored.erase(scored.begin() + static_cast<std::ptrdiff_t>(pos));
    scored.insert(scored.begin() + static_cast<std::ptrdiff_t>(want), std::move(c));
  }
  if (scored.size() > config.max_patches) scored.resize(config.max_patches);

  std::vector<double> scores;
  for (const auto& s : scored) scores.push_back(s.score);
  std::sort(scores.begin(), scores.end(), std::greater<>());
  PatchSet out;
  int width = scored.size() >= 100 ? 3 : 2;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    Patch p = std::move(scored[i].patch);
    std::ostringstream id;
    id << 'p' << std::setw(width) << std::setfill('0') << (i + 1);
    p.id = id.str();
    p.original_rank = static_cast<int>(i) + 1;
    p.apr_score = std::round(scores[i] * 1e6) / 1e6;
    out.patches.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

BugRanks rank_bug(const BugCase& bug, std::size_t max_k) {
  BugRanks r;
  r.bug_id = bug.id;
  r.root_cause = bug.root_cause;
  r.patch_count = bug.patches.size();
  const Patch& correct = bug.patches.at(bug.correct_patch_id);
  r.original = correct.original_rank;

  BuggyContext ctx = bug.buggy_context();
  std::vector<std::string> all;
  for (const auto& p : bug.patches.patches) all.push_back(p.id);
  auto by_similarity = cluster::rank_representatives(all, ctx, bug.patches);
  for (std::size_t i = 0; i < by_similarity.size(); ++i) {
    if (by_similarity[i].patch_id == correct.id) r.similarity_only = static_cast<int>(i) + 1;
  }
  r.ifix = cluster::hierarchical_rank(cluster::cluster_path(bug.patches, ctx, correct.id, max_k));
  r.cluster_count = cluster::sample(bug.patches, ctx, max_k).clusters.size();
  return r;
}

RankingReport evaluate_ranking(const std::vector<BugCase>& corpus, std::size_t max_k) {
  RankingReport report;
  for (const auto& bug : corpus) report.bugs.push_back(rank_bug(bug, max_k));
  std::sort(report.bugs.begin(), report.bugs.end(),
            [](const BugRanks& a, const BugRanks& b) { return a.bug_id < b.bug_id; });
  if (report.bugs.empty()) return report;
  double o = 0, s = 0, i = 0;
  for (const auto& b : report.bugs) {
    o += b.original;
    s += b.similarity_only;
    i += b.ifix;
  }
  double n = static_cast<double>(report.bugs.size());
  report.mean_original = o / n;
  report.mean_similarity_only = s / n;
  report.mean_ifix = i / n;
  return report;
}

json report_to_json(const RankingReport& report) {
  json bugs = json::array();
  for (const auto& b : report.bugs) {
    bugs.push_back({
        {"bug_id", b.bug_id},
        {"root_cause", b.root_cause},
        {"patch_count", b.patch_count},
        {"cluster_count", b.cluster_count},
        {"original", b.original},
        {"similarity_only", b.similarity_only},
        {"ifix", b.ifix},
    });
  }
  return {
      {"bugs", bugs},
      {"mean", {{"original", report.mean_original},
                {"similarity_only", report.mean_similarity_only},
                {"ifix", report.mean_ifix}}},
  };
}

std::string report_to_text(const RankingReport& report) {
  std::size_t id_w = 4, cause_w = 10;
  for (const auto& b : report.bugs) {
    id_w = std::max(id_w, b.bug_id.size());
    cause_w = std::max(cause_w, b.root_cause.size());
  }
  std::ostringstream out;
  auto row = [&](const std::string& id, const std::string& cause, const std::string& n, const std::string& k,
                 const std::string& o, const std::string& s, const std::string& i) {
    out << std::left << std::setw(static_cast<int>(id_w)) << id << "  " << std::setw(static_cast<int>(cause_w))
        << cause << std::right << "  " << std::setw(7) << n << "  " << std::setw(8) << k << "  " << std::setw(8)
        << o << "  " << std::setw(10) << s << "  " << std::setw(5) << i << "\n";
  };
  row("bug", "root_cause", "patches", "clusters", "original", "similarity", "ifix");
  for (const auto& b : report.bugs) {
    row(b.bug_id, b.root_cause, std::to_string(b.patch_count), std::to_string(b.cluster_count),
        std::to_string(b.original), std::to_string(b.similarity_only), std::to_string(b.ifix));
  }
  auto fmt = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v;
    return s.str();
  };
  row("mean", "", "", "", fmt(report.mean_original), fmt(report.mean_similarity_only), fmt(report.mean_ifix));
  return out.str();
}

}  // namespace patchlens::bench
