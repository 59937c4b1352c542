#include "patchlens/dataflow.hpp"

#include <algorithm>
#include <deque>

#include "patchlens/errors.hpp"
#include "patchlens/minilang/printer.hpp"

namespace patchlens::dataflow {

using minilang::Expr;
using minilang::ExprKind;
using minilang::FunctionDef;
using minilang::Stmt;
using minilang::StmtKind;

void collect_vars(const Expr& e, std::set<std::string>& out) {
  if (e.kind == ExprKind::Var) out.insert(e.text);
  for (const auto& c : e.children) collect_vars(*c, out);
}

namespace {

bool is_definition(const Stmt& s) {
  return s.kind == StmtKind::Let || s.kind == StmtKind::Assign || s.kind == StmtKind::IndexAssign;
}

// Reads performed by a simple statement or a compound statement's header part.
std::set<std::string> simple_uses(const Stmt& s) {
  std::set<std::string> out;
  if (s.kind == StmtKind::IndexAssign) out.insert(s.name);
  for (const auto& i : s.indices) collect_vars(*i, out);
  if (s.value) collect_vars(*s.value, out);
  return out;
}

struct Node {
  int line = 0;
  std::vector<std::string> defs;
  std::set<std::string> uses;
  std::vector<int> succ;
};

class CfgBuilder {
 public:
  std::vector<Node> nodes;
  int exit = -1;

  void build(const FunctionDef& f) {
    Node entry;
    entry.line = f.line;
    for (const auto& p : f.params) entry.defs.push_back(p.name);
    int e = add(std::move(entry));
    exit = add(Node{f.end_line, {}, {}, {}});
    auto out = block(f.body, {e});
    link(out, exit);
  }

 private:
  int add(Node n) {
    nodes.push_back(std::move(n));
    return static_cast<int>(nodes.size()) - 1;
  }
  void link(const std::vector<int>& from, int to) {
    for (int f : from) nodes[static_cast<std::size_t>(f)].succ.push_back(to);
  }
  int simple(const Stmt& s, const std::vector<int>& in) {
    Node n;
    n.line = s.line;
    if (is_definition(s)) n.defs.push_back(s.name);
    n.uses = simple_uses(s);
    int id = add(std::move(n));
    link(in, id);
    return id;
  }
  int condition(const Stmt& s, const std::vector<int>& in) {
    Node n;
    n.line = s.line;
    collect_vars(*s.cond, n.uses);
    int id = add(std::move(n));
    link(in, id);
    return id;
  }
  std::vector<int> block(const std::vector<minilang::StmtPtr>& body, std::vector<int> in) {
    for (const auto& s : body) in = statement(*s, in);
    return in;
  }
  std::vector<int> statement(const Stmt& s, const std::vector<int>& in) {
    switch (s.kind) {
      case StmtKind::If: {
        int c = condition(s, in);
        auto then_out = block(s.body, {c});
        auto else_out = s.else_body.empty() ? std::vector<int>{c} : block(s.else_body, {c});
        then_out.insert(then_out.end(), else_out.begin(), else_out.end());
        return then_out;
      }
      case StmtKind::While: {
        int c = condition(s, in);
        link(block(s.body, {c}), c);
        return {c};
      }
      case StmtKind::For: {
        int i = simple(*s.init, in);
        int c = condition(s, {i});
        auto body_out = block(s.body, {c});
        int st = simple(*s.step, body_out);
        link({st}, c);
        return {c};
      }
      case StmtKind::Return: {
        int r = simple(s, in);
        link({r}, exit);
        return {};
      }
      default:
        return {simple(s, in)};
    }
  }
};

const std::set<int> kEmpty;

std::vector<std::string> seed_variables(const Stmt& s) {
  if (is_definition(s)) return {s.name};
  if (s.kind == StmtKind::For) {
    std::vector<std::string> out{s.init->name};
    if (is_definition(*s.step) && s.step->name != s.init->name) out.push_back(s.step->name);
    return out;
  }
  return {};
}

// Statements (including for-header parts) located on `line`.
void statements_on_line(const Stmt& s, int line, std::vector<const Stmt*>& out) {
  if (s.line == line) {
    out.push_back(&s);
    if (s.init) out.push_back(s.init.get());
    if (s.step) out.push_back(s.step.get());
  }
  for (const auto& b : s.body) statements_on_line(*b, line, out);
  for (const auto& b : s.else_body) statements_on_line(*b, line, out);
}

std::vector<const Stmt*> statements_on_line(const FunctionDef& f, int line) {
  std::vector<const Stmt*> out;
  for (const auto& s : f.body) statements_on_line(*s, line, out);
  return out;
}

void all_lines(const Stmt& s, std::set<int>& out) {
  out.insert(s.line);
  for (const auto& b : s.body) all_lines(*b, out);
  for (const auto& b : s.else_body) all_lines(*b, out);
}

// Top-level expressions of one statement part (no recursion into bodies).
std::vector<const Expr*> top_exprs(const Stmt& s) {
  std::vector<const Expr*> out;
  for (const auto& i : s.indices) out.push_back(i.get());
  if (s.value) out.push_back(s.value.get());
  if (s.cond) out.push_back(s.cond.get());
  return out;
}

std::set<std::string> line_uses(const std::vector<const Stmt*>& stmts) {
  std::set<std::string> out;
  for (const Stmt* s : stmts) {
    for (const Expr* e : top_exprs(*s)) collect_vars(*e, out);
  }
  return out;
}

bool mentions(const Expr& e, const std::set<std::string>& vars) {
  if (e.kind == ExprKind::Var && vars.count(e.text)) return true;
  return std::any_of(e.children.begin(), e.children.end(),
                     [&](const auto& c) { return mentions(*c, vars); });
}

bool is_compound(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Unary:
    case ExprKind::Binary:
    case ExprKind::Index:
    case ExprKind::ArrayLit:
      return true;
    default:
      return false;
  }
}

// Operands of the outermost operator; a left-nested chain of one precedence
// level is flattened so `a * b / c` yields a, b, c.
void operands(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == ExprKind::Binary) {
    const Expr& left = *e.children[0];
    if (left.kind == ExprKind::Binary && minilang::precedence(left.binary_op) == minilang::precedence(e.binary_op))
      operands(left, out);
    else
      out.push_back(&left);
    out.push_back(e.children[1].get());
    return;
  }
  for (const auto& c : e.children) out.push_back(c.get());
}

void collect_calls(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == ExprKind::Call) out.push_back(&e);
  for (const auto& c : e.children) collect_calls(*c, out);
}

struct Units {
  const minilang::SourceProgram& program;
  const minilang::SourceProgram* tests;

  const FunctionDef& function(const std::string& name) const {
    if (const FunctionDef* f = program.find_function(name)) return *f;
    if (tests) {
      if (const FunctionDef* f = tests->find_function(name)) return *f;
    }
    throw ProbeResolutionError("no function named '" + name + "'");
  }
};

const Stmt* statement_in(const FunctionDef& f, int line) {
  for (const Stmt* s : statements_on_line(f, line)) return s;
  return nullptr;
}

AffectedSet use_only_set(const FunctionDef& f, int line) {
  AffectedSet out;
  out.variables = line_uses(statements_on_line(f, line));
  out.use_lines.insert(line);
  for (const auto& v : out.variables) out.origin[v] = Origin{"", line};
  return out;
}

std::set<std::string> traced_params(const FunctionDef& f, const AffectedSet& a, int seed_line) {
  std::set<int> lines = a.use_lines;
  lines.insert(seed_line);
  std::set<std::string> used;
  for (int l : lines) {
    auto u = line_uses(statements_on_line(f, l));
    used.insert(u.begin(), u.end());
  }
  std::set<std::string> out;
  for (const auto& p : f.params) {
    if (used.count(p.name) || a.variables.count(p.name)) out.insert(p.name);
  }
  return out;
}

void collect_returns(const Stmt& s, std::vector<const Stmt*>& out) {
  if (s.kind == StmtKind::Return && s.value) out.push_back(&s);
  for (const auto& b : s.body) collect_returns(*b, out);
  for (const auto& b : s.else_body) collect_returns(*b, out);
}

bool return_participates(const FunctionDef& f, const std::set<std::string>& traced,
                         const std::string& inner_callee) {
  std::vector<const Stmt*> returns;
  for (const auto& s : f.body) collect_returns(*s, returns);
  for (const Stmt* r : returns) {
    if (mentions(*r->value, traced)) return true;
    if (!inner_callee.empty()) {
      std::vector<const Expr*> calls;
      collect_calls(*r->value, calls);
      for (const Expr* c : calls) {
        if (c->text == inner_callee) return true;
      }
    }
  }
  return false;
}

}  // namespace

const std::set<int>& DefUseChains::uses_of(const std::string& var, int def_line) const {
  auto it = du.find({var, def_line});
  return it == du.end() ? kEmpty : it->second;
}

DefUseChains def_use_analysis(const FunctionDef& f) {
  CfgBuilder cfg;
  cfg.build(f);
  const auto& nodes = cfg.nodes;

  struct Def {
    int node;
    std::string var;
  };
  std::vector<Def> defs;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    for (const auto& v : nodes[n].defs) defs.push_back(Def{static_cast<int>(n), v});
  }
  std::size_t nd = defs.size();
  std::vector<std::vector<int>> preds(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    for (int s : nodes[n].succ) preds[static_cast<std::size_t>(s)].push_back(static_cast<int>(n));
  }

  using Bits = std::vector<char>;
  std::vector<Bits> in(nodes.size(), Bits(nd, 0)), out(nodes.size(), Bits(nd, 0));
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      Bits next_in(nd, 0);
      for (int p : preds[n]) {
        for (std::size_t d = 0; d < nd; ++d) next_in[d] |= out[static_cast<std::size_t>(p)][d];
      }
      Bits next_out = next_in;
      for (std::size_t d = 0; d < nd; ++d) {
        const auto& mine = nodes[n].defs;
        bool redefined = std::find(mine.begin(), mine.end(), defs[d].var) != mine.end();
        if (defs[d].node == static_cast<int>(n))
          next_out[d] = 1;
        else if (redefined)
          next_out[d] = 0;
      }
      if (next_in != in[n] || next_out != out[n]) {
        in[n] = std::move(next_in);
        out[n] = std::move(next_out);
        changed = true;
      }
    }
  }

  DefUseChains chains;
  for (const auto& d : defs) {
    int line = nodes[static_cast<std::size_t>(d.node)].line;
    chains.def_lines[d.var].insert(line);
    chains.du[{d.var, line}];
  }
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const Node& node = nodes[n];
    for (const auto& u : node.uses) {
      for (std::size_t d = 0; d < nd; ++d) {
        if (in[n][d] && defs[d].var == u)
          chains.du[{u, nodes[static_cast<std::size_t>(defs[d].node)].line}].insert(node.line);
      }
      auto& slot = chains.ud[node.line][u];
      for (const auto& w : node.defs) slot.insert(w);
    }
  }
  return chains;
}

AffectedSet affected_by_statement(const Stmt& s, const FunctionDef& f) {
  return affected_by_statement(s, f, def_use_analysis(f));
}

AffectedSet affected_by_statement(const Stmt& s, const FunctionDef& f, const DefUseChains& chains) {
  std::vector<std::string> seeds = seed_variables(s);
  if (seeds.empty())
    throw NoDefinition(f.name + ":" + std::to_string(s.line) + " defines no variable");

  AffectedSet out;
  std::set<std::pair<std::string, int>> visited;
  std::deque<std::pair<std::string, int>> work;
  for (const auto& v : seeds) {
    out.variables.insert(v);
    out.origin[v] = Origin{"", s.line};
    work.emplace_back(v, s.line);
  }
  while (!work.empty()) {
    auto item = work.front();
    work.pop_front();
    if (!visited.insert(item).second) continue;
    for (int use : chains.uses_of(item.first, item.second)) {
      out.use_lines.insert(use);
      auto line_it = chains.ud.find(use);
      if (line_it == chains.ud.end()) continue;
      auto var_it = line_it->second.find(item.first);
      if (var_it == line_it->second.end()) continue;
      for (const auto& w : var_it->second) {
        if (out.variables.insert(w).second) out.origin[w] = Origin{item.first, use};
        work.emplace_back(w, use);
      }
    }
  }
  return out;
}

std::vector<FrameTrace> trace_across_frames(const minilang::CallStack& stack,
                                            const minilang::SourceProgram& program,
                                            const minilang::SourceProgram* tests, int seed_line) {
  Units units{program, tests};
  std::vector<FrameTrace> out;
  for (std::size_t j = 0; j < stack.frames.size(); ++j) {
    const auto& frame = stack.frames[j];
    const FunctionDef& f = units.function(frame.function);
    FrameTrace t;
    t.frame = frame;
    int line = j == 0 ? seed_line : frame.line;
    t.frame.line = line;

    bool seeded = j == 0;
    std::string callee;
    if (j > 0) {
      const FrameTrace& inner = out.back();
      callee = inner.frame.function;
      const FunctionDef& callee_fn = units.function(callee);
      bool inner_carries = j >= 2 && !out[j - 1].traced_call.empty();
      std::string inner_callee = inner_carries ? out[j - 2].frame.function : std::string{};
      seeded = return_participates(callee_fn, inner.traced_variables, inner_callee);

      std::set<std::string> params = inner.traced_variables;
      std::vector<const Expr*> calls;
      for (const Stmt* s : statements_on_line(f, line)) {
        for (const Expr* e : top_exprs(*s)) collect_calls(*e, calls);
      }
      for (const Expr* call : calls) {
        if (call->text != callee) continue;
        if (seeded && t.traced_call.empty()) t.traced_call = minilang::print_expr(*call);
        for (std::size_t i = 0; i < callee_fn.params.size() && i < call->children.size(); ++i) {
          if (!params.count(callee_fn.params[i].name)) continue;
          std::set<std::string> vars;
          collect_vars(*call->children[i], vars);
          if (vars.empty()) continue;
          std::string text = minilang::print_expr(*call->children[i]);
          if (std::find(t.traced_arguments.begin(), t.traced_arguments.end(), text) == t.traced_arguments.end())
            t.traced_arguments.push_back(text);
        }
      }
    }

    if (seeded) {
      const Stmt* s = statement_in(f, line);
      if (!s) throw ProbeResolutionError(f.name + ":" + std::to_string(line) + " holds no statement");
      try {
        t.affected = affected_by_statement(*s, f);
      } catch (const NoDefinition&) {
        t.affected = use_only_set(f, line);
        t.use_only = true;
      }
      t.traced_variables = t.affected.variables;
      auto params = traced_params(f, t.affected, line);
      t.traced_variables.insert(params.begin(), params.end());
    }
    for (const auto& arg : t.traced_arguments) {
      for (const Stmt* s : statements_on_line(f, line)) {
        for (const Expr* e : top_exprs(*s)) {
          std::vector<const Expr*> calls;
          collect_calls(*e, calls);
          for (const Expr* c : calls) {
            if (c->text != callee) continue;
            for (const auto& a : c->children) {
              if (minilang::print_expr(*a) == arg) collect_vars(*a, t.traced_variables);
            }
          }
        }
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

minilang::InstrumentationPlan plan_instrumentation(const std::vector<FrameTrace>& traces,
                                                   const minilang::SourceProgram& program,
                                                   const minilang::SourceProgram* tests) {
  using minilang::Probe;
  using minilang::ProbeKind;
  Units units{program, tests};
  minilang::InstrumentationPlan plan;
  for (const auto& t : traces) {
    const FunctionDef& f = units.function(t.frame.function);
    const auto& traced = t.traced_variables;
    if (traced.empty() && t.traced_call.empty()) continue;

    std::set<int> lines;
    for (const auto& s : f.body) all_lines(*s, lines);
    for (int line : lines) {
      auto stmts = statements_on_line(f, line);
      std::set<std::string> defined;
      for (const Stmt* s : stmts) {
        if (is_definition(*s) && traced.count(s->name)) {
          defined.insert(s->name);
          plan.add(Probe{f.name, line, ProbeKind::VarDef, s->name, s->column});
        }
      }
      std::vector<const Expr*> tops;
      for (const Stmt* s : stmts) {
        auto e = top_exprs(*s);
        tops.insert(tops.end(), e.begin(), e.end());
      }
      std::vector<const Expr*> vars;
      std::vector<const Expr*> calls;
      for (const Expr* e : tops) {
        std::vector<const Expr*> stack{e};
        while (!stack.empty()) {
          const Expr* x = stack.back();
          stack.pop_back();
          if (x->kind == ExprKind::Var) vars.push_back(x);
          if (x->kind == ExprKind::Call) calls.push_back(x);
          for (const auto& c : x->children) stack.push_back(c.get());
        }
      }
      for (const Expr* v : vars) {
        if (traced.count(v->text) && !defined.count(v->text))
          plan.add(Probe{f.name, line, ProbeKind::VarUse, v->text, v->column});
      }
      for (const Expr* e : tops) {
        if (!mentions(*e, traced)) continue;
        if (is_compound(*e))
          plan.add(Probe{f.name, line, ProbeKind::Subexpr, minilang::print_expr(*e), e->column});
        std::vector<const Expr*> parts;
        operands(*e, parts);
        for (const Expr* p : parts) {
          if (is_compound(*p) && mentions(*p, traced))
            plan.add(Probe{f.name, line, ProbeKind::Subexpr, minilang::print_expr(*p), p->column});
        }
      }
      for (const Expr* c : calls) {
        if (c->type.is_void()) continue;
        std::string name = minilang::print_expr(*c);
        if (mentions(*c, traced) || (line == t.frame.line && name == t.traced_call))
          plan.add(Probe{f.name, line, ProbeKind::Call, name, c->column});
      }
    }
  }
  return plan;
}

}  // namespace patchlens::dataflow
