#include "patchlens/minilang/interpreter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "patchlens/errors.hpp"
#include "patchlens/minilang/parser.hpp"
#include "patchlens/minilang/printer.hpp"
#include "patchlens/minilang/value.hpp"

namespace patchlens::minilang {

const char* to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::VarDef: return "var-def";
    case ProbeKind::VarUse: return "var-use";
    case ProbeKind::Subexpr: return "subexpr";
    case ProbeKind::Call: return "call";
  }
  return "?";
}

ProbeKind probe_kind_from_string(const std::string& s) {
  if (s == "var-def") return ProbeKind::VarDef;
  if (s == "var-use") return ProbeKind::VarUse;
  if (s == "subexpr") return ProbeKind::Subexpr;
  if (s == "call") return ProbeKind::Call;
  throw FormatError("unknown probe kind '" + s + "'");
}

void InstrumentationPlan::add(Probe p) {
  auto it = std::lower_bound(probes.begin(), probes.end(), p);
  if (it != probes.end() && *it == p) return;
  probes.insert(it, std::move(p));
}

bool InstrumentationPlan::contains(const Probe& p) const {
  return std::binary_search(probes.begin(), probes.end(), p);
}

std::vector<TestCase> discover_tests(const SourceProgram& unit) {
  std::vector<TestCase> tests;
  for (const auto& f : unit.functions) {
    if (f.name.rfind("test_", 0) != 0) continue;
    if (!f.params.empty() || !f.return_type.is_void())
      throw SyntaxError(f.line, 1, "test '" + f.name + "' must take no parameters and return nothing");
    tests.push_back(TestCase{f.name, &f, &unit});
  }
  return tests;
}

namespace {

struct Trap {
  int line;
  std::string message;
};

struct AssertFailure {
  int line;
  std::string message;
};

// Probe hooks resolved against AST node identity for one run.
struct Hooks {
  std::unordered_map<const Expr*, int> exprs;
  std::unordered_map<const Stmt*, int> defs;
  std::vector<const Probe*> probes;
  std::vector<int> counts;
  std::vector<ProbeRecord>* out = nullptr;

  void record(int index, const Value& v) {
    const Probe& p = *probes[index];
    out->push_back(ProbeRecord{p.function, p.line, ++counts[index], p.name, p.kind, render_summary(v)});
  }
};

// ---------------------------------------------------------------------------
// Probe resolution

void collect_line_exprs(const Expr& e, int line, std::vector<const Expr*>& out) {
  if (e.line == line) out.push_back(&e);
  for (const auto& c : e.children) collect_line_exprs(*c, line, out);
}

void collect_line_parts(const Stmt& s, int line, std::vector<const Expr*>& exprs,
                        std::vector<const Stmt*>& stmts) {
  if (s.line == line) {
    stmts.push_back(&s);
    for (const auto& i : s.indices) collect_line_exprs(*i, line, exprs);
    if (s.value) collect_line_exprs(*s.value, line, exprs);
    if (s.init) collect_line_parts(*s.init, line, exprs, stmts);
    if (s.cond) collect_line_exprs(*s.cond, line, exprs);
    if (s.step) collect_line_parts(*s.step, line, exprs, stmts);
  }
  for (const auto& b : s.body) collect_line_parts(*b, line, exprs, stmts);
  for (const auto& b : s.else_body) collect_line_parts(*b, line, exprs, stmts);
}

const FunctionDef* find_in_units(const SourceProgram& program, const SourceProgram* tests,
                                 const std::string& name) {
  if (const FunctionDef* f = program.find_function(name)) return f;
  return tests ? tests->find_function(name) : nullptr;
}

const Expr* first_by_column(const std::vector<const Expr*>& candidates) {
  const Expr* best = nullptr;
  for (const Expr* e : candidates) {
    if (!best || e->column < best->column) best = e;
  }
  return best;
}

// Resolves one probe to the node(s) that trigger it; throws on failure.
void resolve_probe(const SourceProgram& program, const SourceProgram* tests, const Probe& p,
                   int index, Hooks* hooks) {
  const FunctionDef* fn = find_in_units(program, tests, p.function);
  auto fail = [&](const std::string& why) {
    throw ProbeResolutionError("probe " + std::string(to_string(p.kind)) + " '" + p.name + "' at " +
                               p.function + ":" + std::to_string(p.line) + ": " + why);
  };
  if (!fn) fail("no such function");
  std::vector<const Expr*> exprs;
  std::vector<const Stmt*> stmts;
  for (const auto& s : fn->body) collect_line_parts(*s, p.line, exprs, stmts);
  if (stmts.empty()) fail("no statement on that line");

  if (p.kind == ProbeKind::VarDef) {
    bool found = false;
    for (const Stmt* s : stmts) {
      bool defines = (s->kind == StmtKind::Let || s->kind == StmtKind::Assign ||
                      s->kind == StmtKind::IndexAssign) &&
                     s->name == p.name;
      if (!defines) continue;
      found = true;
      if (hooks) hooks->defs[s] = index;
    }
    if (!found) fail("variable is not defined there");
    return;
  }

  std::vector<const Expr*> matches;
  for (const Expr* e : exprs) {
    bool ok = false;
    switch (p.kind) {
      case ProbeKind::VarUse:
        ok = e->kind == ExprKind::Var && e->text == p.name;
        break;
      case ProbeKind::Call:
        ok = e->kind == ExprKind::Call && !e->type.is_void() && print_expr(*e) == p.name;
        break;
      case ProbeKind::Subexpr:
        ok = e->kind != ExprKind::Call && e->kind != ExprKind::Var && print_expr(*e) == p.name;
        break;
      case ProbeKind::VarDef:
        break;
    }
    if (ok) matches.push_back(e);
  }
  if (matches.empty()) fail("name is not evaluated there");
  if (hooks) hooks->exprs[first_by_column(matches)] = index;
}

// ---------------------------------------------------------------------------
// Evaluation

Value coerce(Value v, const Type& t) {
  if (t.is_float() && v.is_int()) return Value::of_float(static_cast<double>(v.as_int()));
  return v;
}

std::int32_t float_to_int(double d) {
  if (std::isnan(d)) return 0;
  if (d >= 2147483647.0) return std::numeric_limits<std::int32_t>::max();
  if (d <= -2147483648.0) return std::numeric_limits<std::int32_t>::min();
  return static_cast<std::int32_t>(d);
}

class Machine {
 public:
  Machine(const SourceProgram& program, const SourceProgram* unit, const RunOptions& options,
          Hooks* hooks)
      : program_(program), unit_(unit), options_(options), hooks_(hooks) {}

  TestOutcome run(const FunctionDef& test) {
    TestOutcome outcome;
    try {
      call(test, {}, test.line);
    } catch (const AssertFailure& f) {
      outcome.status = TestStatus::Fail;
      outcome.failing_line = f.line;
      outcome.message = "assertion failed: " + f.message;
    } catch (const Trap& t) {
      outcome.status = TestStatus::Fail;
      outcome.failing_line = t.line;
      outcome.message = "runtime trap: " + t.message;
    }
    outcome.call_stack = captured_;
    outcome.output = std::move(output_);
    return outcome;
  }

 private:
  struct Frame {
    const FunctionDef* fn;
    std::vector<Value> slots;
    int line;
  };

  enum class Flow { Normal, Return };

  [[noreturn]] void trap(const std::string& msg) const {
    throw Trap{frames_.empty() ? 0 : frames_.back().line, msg};
  }

  void tick(int line) {
    Frame& f = frames_.back();
    f.line = line;
    if (++steps_ > options_.limits.max_steps) trap("step limit exceeded");
    if (options_.capture_line && !captured_ && line == *options_.capture_line &&
        f.fn->file == options_.capture_file) {
      CallStack cs;
      for (auto it = frames_.rbegin(); it != frames_.rend(); ++it)
        cs.frames.push_back(StackFrame{it->fn->name, it->line});
      captured_ = std::move(cs);
    }
  }

  const FunctionDef& resolve(const std::string& name) const {
    if (unit_) {
      if (const FunctionDef* f = unit_->find_function(name)) return *f;
    }
    if (const FunctionDef* f = program_.find_function(name)) return *f;
    trap("undefined function '" + name + "'");
  }

  Value call(const FunctionDef& fn, std::vector<Value> args, int call_line) {
    if (static_cast<int>(frames_.size()) >= options_.limits.max_depth) trap("stack overflow");
    Frame frame{&fn, std::vector<Value>(static_cast<std::size_t>(fn.slot_count)), call_line};
    for (std::size_t i = 0; i < args.size(); ++i)
      frame.slots[i] = coerce(std::move(args[i]), fn.params[i].type);
    frames_.push_back(std::move(frame));
    return_value_ = Value();
    Flow flow = exec_block(fn.body);
    if (flow != Flow::Return && !fn.return_type.is_void()) {
      frames_.back().line = fn.end_line;
      trap("missing return in '" + fn.name + "'");
    }
    Value result = coerce(std::move(return_value_), fn.return_type);
    return_value_ = Value();
    frames_.pop_back();
    return result;
  }

  Flow exec_block(const std::vector<StmtPtr>& body) {
    for (const auto& s : body) {
      if (exec(*s) == Flow::Return) return Flow::Return;
    }
    return Flow::Normal;
  }

  std::vector<Value>& slots() { return frames_.back().slots; }

  void after_def(const Stmt& s) {
    if (!hooks_) return;
    auto it = hooks_->defs.find(&s);
    if (it != hooks_->defs.end()) hooks_->record(it->second, slots()[s.slot]);
  }

  void exec_simple(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::Let:
      case StmtKind::Assign: {
        Value v = eval(*s.value);
        slots()[s.slot] = coerce(std::move(v), s.var_type);
        after_def(s);
        break;
      }
      case StmtKind::IndexAssign: {
        std::vector<std::int32_t> idx;
        for (const auto& i : s.indices) idx.push_back(eval(*i).as_int());
        Value v = eval(*s.value);
        Value* target = &slots()[s.slot];
        Type t = s.var_type;
        for (std::int32_t i : idx) {
          Array& a = target->as_array();
          if (i < 0 || i >= static_cast<std::int32_t>(a.size()))
            trap("index " + std::to_string(i) + " out of bounds for length " + std::to_string(a.size()));
          target = &a[static_cast<std::size_t>(i)];
          t = t.element();
        }
        *target = coerce(std::move(v), t);
        after_def(s);
        break;
      }
      default:
        break;
    }
  }

  Flow exec(const Stmt& s) {
    tick(s.line);
    switch (s.kind) {
      case StmtKind::Let:
      case StmtKind::Assign:
      case StmtKind::IndexAssign:
        exec_simple(s);
        return Flow::Normal;
      case StmtKind::ExprStmt:
        eval(*s.value);
        return Flow::Normal;
      case StmtKind::Return:
        return_value_ = s.value ? eval(*s.value) : Value();
        return Flow::Return;
      case StmtKind::If:
        if (eval(*s.cond).as_bool()) return exec_block(s.body);
        return exec_block(s.else_body);
      case StmtKind::While:
        while (eval(*s.cond).as_bool()) {
          if (exec_block(s.body) == Flow::Return) return Flow::Return;
          tick(s.line);
        }
        return Flow::Normal;
      case StmtKind::For:
        exec_simple(*s.init);
        while (eval(*s.cond).as_bool()) {
          if (exec_block(s.body) == Flow::Return) return Flow::Return;
          tick(s.line);
          exec_simple(*s.step);
        }
        return Flow::Normal;
    }
    return Flow::Normal;
  }

  Value eval(const Expr& e) {
    Value v = eval_raw(e);
    if (hooks_) {
      auto it = hooks_->exprs.find(&e);
      if (it != hooks_->exprs.end()) hooks_->record(it->second, v);
    }
    return v;
  }

  Value eval_raw(const Expr& e) {
    switch (e.kind) {
      case ExprKind::IntLit: return Value::of_int(e.int_value);
      case ExprKind::FloatLit: return Value::of_float(e.float_value);
      case ExprKind::BoolLit: return Value::of_bool(e.bool_value);
      case ExprKind::StrLit: return Value::of_str(unquote(e.text));
      case ExprKind::Var: return slots()[e.slot];
      case ExprKind::ArrayLit: {
        Array a;
        a.reserve(e.children.size());
        Type elem = e.type.element();
        for (const auto& c : e.children) a.push_back(coerce(eval(*c), elem));
        return Value::of_array(std::move(a));
      }
      case ExprKind::Index: {
        std::int32_t i = eval(*e.children[1]).as_int();
        const Value* base = borrow_var(*e.children[0]);
        Value copy;
        if (!base) {
          copy = eval(*e.children[0]);
          base = &copy;
        }
        const Array& arr = base->as_array();
        if (i < 0 || i >= static_cast<std::int32_t>(arr.size()))
          trap("index " + std::to_string(i) + " out of bounds for length " + std::to_string(arr.size()));
        return arr[static_cast<std::size_t>(i)];
      }
      case ExprKind::Unary: {
        Value v = eval(*e.children[0]);
        if (e.unary_op == UnaryOp::Not) return Value::of_bool(!v.as_bool());
        if (v.is_int()) return Value::of_int(wrap_neg(v.as_int()));
        return Value::of_float(-v.as_float());
      }
      case ExprKind::Binary: return eval_binary(e);
      case ExprKind::Call: return eval_call(e);
    }
    return Value();
  }

  static std::string unquote(const std::string& lit) {
    std::string out;
    for (std::size_t i = 1; i + 1 < lit.size(); ++i) {
      char c = lit[i];
      if (c == '\\' && i + 2 < lit.size()) {
        char n = lit[++i];
        switch (n) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          default: out.push_back(n);
        }
      } else {
        out.push_back(c);
      }
    }
    return out;
  }

  Value eval_binary(const Expr& e) {
    BinaryOp op = e.binary_op;
    if (op == BinaryOp::And) {
      if (!eval(*e.children[0]).as_bool()) return Value::of_bool(false);
      return Value::of_bool(eval(*e.children[1]).as_bool());
    }
    if (op == BinaryOp::Or) {
      if (eval(*e.children[0]).as_bool()) return Value::of_bool(true);
      return Value::of_bool(eval(*e.children[1]).as_bool());
    }
    Value a = eval(*e.children[0]);
    Value b = eval(*e.children[1]);
    if (is_arithmetic(op)) {
      if (e.type.is_str()) return Value::of_str(a.as_str() + b.as_str());
      if (e.type.is_int()) {
        std::int32_t x = a.as_int();
        std::int32_t y = b.as_int();
        switch (op) {
          case BinaryOp::Add: return Value::of_int(wrap_add(x, y));
          case BinaryOp::Sub: return Value::of_int(wrap_sub(x, y));
          case BinaryOp::Mul: return Value::of_int(wrap_mul(x, y));
          case BinaryOp::Div:
            if (y == 0) trap("division by zero");
            return Value::of_int(wrap_div(x, y));
          case BinaryOp::Mod:
            if (y == 0) trap("division by zero");
            return Value::of_int(wrap_mod(x, y));
          default: break;
        }
      }
      double x = a.as_number();
      double y = b.as_number();
      switch (op) {
        case BinaryOp::Add: return Value::of_float(x + y);
        case BinaryOp::Sub: return Value::of_float(x - y);
        case BinaryOp::Mul: return Value::of_float(x * y);
        case BinaryOp::Div: return Value::of_float(x / y);
        case BinaryOp::Mod: return Value::of_float(std::fmod(x, y));
        default: break;
      }
    }
    if (op == BinaryOp::Eq || op == BinaryOp::Ne) {
      bool eq;
      if (a.is_bool()) {
        eq = a.as_bool() == b.as_bool();
      } else if (a.is_str()) {
        eq = a.as_str() == b.as_str();
      } else if (a.is_int() && b.is_int()) {
        eq = a.as_int() == b.as_int();
      } else {
        eq = a.as_number() == b.as_number();
      }
      return Value::of_bool(op == BinaryOp::Eq ? eq : !eq);
    }
    if (a.is_int() && b.is_int()) return Value::of_bool(compare(op, a.as_int(), b.as_int()));
    return Value::of_bool(compare(op, a.as_number(), b.as_number()));
  }

  template <typename T>
  static bool compare(BinaryOp op, T x, T y) {
    switch (op) {
      case BinaryOp::Lt: return x < y;
      case BinaryOp::Le: return x <= y;
      case BinaryOp::Gt: return x > y;
      case BinaryOp::Ge: return x >= y;
      default: return false;
    }
  }

  // A variable read without copying its value; records var-use probes like eval.
  const Value* borrow_var(const Expr& e) {
    if (e.kind != ExprKind::Var) return nullptr;
    const Value* v = &slots()[e.slot];
    if (hooks_) {
      auto it = hooks_->exprs.find(&e);
      if (it != hooks_->exprs.end()) hooks_->record(it->second, *v);
    }
    return v;
  }

  Value eval_call(const Expr& e) {
    if (e.text == "len" && e.children.size() == 1) {
      if (const Value* v = borrow_var(*e.children[0])) {
        return Value::of_int(static_cast<std::int32_t>(v->is_str() ? v->as_str().size() : v->as_array().size()));
      }
    }
    std::vector<Value> args;
    args.reserve(e.children.size());
    for (const auto& c : e.children) args.push_back(eval(*c));
    const std::string& n = e.text;
    if (is_builtin(n)) return builtin(e, n, args);
    const FunctionDef& fn = resolve(n);
    return call(fn, std::move(args), frames_.back().line);
  }

  Value builtin(const Expr& e, const std::string& n, std::vector<Value>& args) {
    if (n == "sqrt") return Value::of_float(std::sqrt(args[0].as_number()));
    if (n == "exp") return Value::of_float(std::exp(args[0].as_number()));
    if (n == "float") return Value::of_float(args[0].as_number());
    if (n == "int") {
      if (args[0].is_int()) return args[0];
      return Value::of_int(float_to_int(args[0].as_float()));
    }
    if (n == "abs") {
      if (args[0].is_int()) {
        std::int32_t v = args[0].as_int();
        return Value::of_int(v < 0 ? wrap_neg(v) : v);
      }
      return Value::of_float(std::fabs(args[0].as_float()));
    }
    if (n == "min" || n == "max") {
      bool is_min = n == "min";
      if (e.type.is_int()) {
        std::int32_t x = args[0].as_int();
        std::int32_t y = args[1].as_int();
        return Value::of_int(is_min ? std::min(x, y) : std::max(x, y));
      }
      double x = args[0].as_number();
      double y = args[1].as_number();
      if (std::isnan(x) || std::isnan(y)) return Value::of_float(std::numeric_limits<double>::quiet_NaN());
      return Value::of_float(is_min ? std::min(x, y) : std::max(x, y));
    }
    if (n == "len") {
      if (args[0].is_str()) return Value::of_int(static_cast<std::int32_t>(args[0].as_str().size()));
      return Value::of_int(static_cast<std::int32_t>(args[0].as_array().size()));
    }
    if (n == "print") {
      output_ += args[0].is_str() ? args[0].as_str() : render(args[0]);
      output_.push_back('\n');
      return Value();
    }
    if (n == "assert") {
      if (!args[0].as_bool()) throw AssertFailure{frames_.back().line, args[1].as_str()};
      return Value();
    }
    if (n == "fill") {
      std::int32_t count = args[0].as_int();
      if (count < 0) trap("fill with negative length " + std::to_string(count));
      if (count > 10'000'000) trap("fill length too large");
      return Value::of_array(Array(static_cast<std::size_t>(count), args[1]));
    }
    trap("unknown builtin '" + n + "'");
  }

  const SourceProgram& program_;
  const SourceProgram* unit_;
  const RunOptions& options_;
  Hooks* hooks_;
  std::vector<Frame> frames_;
  Value return_value_;
  long steps_ = 0;
  std::optional<CallStack> captured_;
  std::string output_;
};

}  // namespace

TestOutcome run_test(const SourceProgram& program, const TestCase& test, const RunOptions& options) {
  Machine m(program, test.unit, options, nullptr);
  return m.run(*test.body);
}

CallStack capture_call_stack(const SourceProgram& program, const TestCase& test, int target_line,
                             const std::string& file) {
  RunOptions options;
  options.capture_line = target_line;
  options.capture_file = file.empty() ? program.file : file;
  TestOutcome outcome = run_test(program, test, options);
  if (!outcome.call_stack)
    throw TargetNotExecuted("test '" + test.name + "' never executes " + options.capture_file + ":" +
                            std::to_string(target_line));
  return *outcome.call_stack;
}

void validate_plan(const SourceProgram& program, const SourceProgram* tests,
                   const InstrumentationPlan& plan) {
  for (std::size_t i = 0; i < plan.probes.size(); ++i)
    resolve_probe(program, tests, plan.probes[i], static_cast<int>(i), nullptr);
}

TracedRun execute_traced(const SourceProgram& program, const TestCase& test,
                         const InstrumentationPlan& plan, const std::string& version,
                         const RunLimits& limits) {
  TracedRun run;
  run.log.version = version;
  Hooks hooks;
  hooks.out = &run.log.records;
  hooks.counts.assign(plan.probes.size(), 0);
  for (std::size_t i = 0; i < plan.probes.size(); ++i) {
    hooks.probes.push_back(&plan.probes[i]);
    resolve_probe(program, test.unit, plan.probes[i], static_cast<int>(i), &hooks);
  }
  RunOptions options;
  options.limits = limits;
  Machine m(program, test.unit, options, plan.empty() ? nullptr : &hooks);
  run.outcome = m.run(*test.body);
  return run;
}

}  // namespace patchlens::minilang
