#include "patchlens/minilang/parser.hpp"

#include <array>
#include <charconv>
#include <cstdlib>
#include <limits>
#include <set>
#include <unordered_map>

#include "patchlens/errors.hpp"
#include "patchlens/minilang/lexer.hpp"

namespace patchlens::minilang {
namespace {

constexpr std::array<std::string_view, 11> kBuiltins = {
    "sqrt", "exp", "abs", "min", "max", "len", "print", "assert", "float", "int", "fill"};

class Parser {
 public:
  Parser(std::string_view text, std::string file) : tokens_(lex(text)), file_(std::move(file)) {}

  std::vector<FunctionDef> parse_program() {
    std::vector<FunctionDef> fns;
    while (peek().kind != TokenKind::End) fns.push_back(parse_function());
    return fns;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }
  const Token& next() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  bool at(std::string_view lexeme) const {
    const Token& t = peek();
    return (t.kind == TokenKind::Punct || t.kind == TokenKind::Keyword) && t.lexeme == lexeme;
  }
  bool accept(std::string_view lexeme) {
    if (!at(lexeme)) return false;
    next();
    return true;
  }
  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    std::string found = t.kind == TokenKind::End ? "end of input" : "'" + t.lexeme + "'";
    throw SyntaxError(t.line, t.column, msg + ", found " + found);
  }
  const Token& expect(std::string_view lexeme) {
    if (!at(lexeme)) fail(peek(), "expected '" + std::string(lexeme) + "'");
    return next();
  }
  std::string expect_identifier(const char* what) {
    if (peek().kind != TokenKind::Identifier) fail(peek(), std::string("expected ") + what);
    return next().lexeme;
  }

  Type parse_type() {
    const Token& t = peek();
    if (t.kind == TokenKind::Keyword) {
      if (t.lexeme == "int") { next(); return Type::scalar(BaseType::Int); }
      if (t.lexeme == "float") { next(); return Type::scalar(BaseType::Float); }
      if (t.lexeme == "bool") { next(); return Type::scalar(BaseType::Bool); }
      if (t.lexeme == "str") { next(); return Type::scalar(BaseType::Str); }
      if (t.lexeme == "void") { next(); return Type::scalar(BaseType::Void); }
      if (t.lexeme == "array") {
        next();
        expect("<");
        Type elem = parse_type();
        if (elem.is_void()) fail(peek(), "array element type cannot be void");
        expect(">");
        return elem.array_of();
      }
    }
    fail(t, "expected a type");
  }

  FunctionDef parse_function() {
    FunctionDef fn;
    fn.file = file_;
    const Token& kw = expect("fn");
    fn.line = kw.line;
    fn.name = expect_identifier("function name");
    expect("(");
    if (!at(")")) {
      do {
        Param p;
        p.name = expect_identifier("parameter name");
        expect(":");
        p.type = parse_type();
        if (p.type.is_void()) fail(peek(), "parameter cannot be void");
        fn.params.push_back(std::move(p));
      } while (accept(","));
    }
    expect(")");
    if (accept("->")) fn.return_type = parse_type();
    last_stmt_line_ = 0;
    fn.body = parse_block(fn.end_line);
    return fn;
  }

  std::vector<StmtPtr> parse_block(int& close_line) {
    expect("{");
    std::vector<StmtPtr> body;
    while (!at("}")) {
      if (peek().kind == TokenKind::End) fail(peek(), "expected '}'");
      body.push_back(parse_statement());
    }
    close_line = next().line;
    return body;
  }

  void begin_statement(const Token& start) {
    if (start.line <= last_stmt_line_)
      throw SyntaxError(start.line, start.column, "only one statement per line is allowed");
    last_stmt_line_ = start.line;
  }

  void require_same_line(const Token& start, const Token& t, const char* what) {
    if (t.line != start.line)
      throw SyntaxError(t.line, t.column, std::string(what) + " must be on the statement's line");
  }

  StmtPtr parse_statement() {
    const Token& start = peek();
    begin_statement(start);
    StmtPtr s;
    if (at("if")) {
      s = parse_if(start);
    } else if (at("while")) {
      s = std::make_unique<Stmt>();
      s->kind = StmtKind::While;
      next();
      expect("(");
      s->cond = parse_expr();
      expect(")");
      require_same_line(start, peek(), "'{'");
      int close = 0;
      s->body = parse_block(close);
    } else if (at("for")) {
      s = std::make_unique<Stmt>();
      s->kind = StmtKind::For;
      next();
      expect("(");
      s->init = parse_simple(start);
      if (s->init->kind != StmtKind::Let && s->init->kind != StmtKind::Assign)
        fail(peek(), "for-loop initializer must be a let or an assignment");
      expect(";");
      s->cond = parse_expr();
      expect(";");
      s->step = parse_simple(start);
      if (s->step->kind != StmtKind::Assign && s->step->kind != StmtKind::IndexAssign)
        fail(peek(), "for-loop step must be an assignment");
      expect(")");
      require_same_line(start, peek(), "'{'");
      int close = 0;
      s->body = parse_block(close);
    } else {
      s = parse_simple(start);
      require_same_line(start, peek(), "';'");
      expect(";");
    }
    s->line = start.line;
    s->column = start.column;
    return s;
  }

  StmtPtr parse_if(const Token& start) {
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::If;
    s->line = start.line;
    s->column = start.column;
    expect("if");
    expect("(");
    s->cond = parse_expr();
    expect(")");
    require_same_line(start, peek(), "'{'");
    int close = 0;
    s->body = parse_block(close);
    if (at("else")) {
      const Token& else_tok = next();
      if (at("if")) {
        // `} else if (...) {` opens a new statement on the else line.
        const Token& if_tok = peek();
        if (if_tok.line != else_tok.line) fail(if_tok, "'else if' must be on one line");
        begin_statement(if_tok);
        s->else_body.push_back(parse_if(if_tok));
        s->else_if = true;
      } else {
        s->else_body = parse_block(close);
      }
    }
    return s;
  }

  // let / assignment / index assignment / bare expression, without the ';'.
  StmtPtr parse_simple(const Token& start) {
    auto s = std::make_unique<Stmt>();
    s->line = start.line;
    s->column = peek().column;
    if (accept("let")) {
      s->kind = StmtKind::Let;
      s->name = expect_identifier("variable name");
      if (accept(":")) {
        s->declared = parse_type();
        if (s->declared->is_void()) fail(peek(), "variable cannot be void");
      }
      expect("=");
      s->value = parse_expr();
      return s;
    }
    if (accept("return")) {
      s->kind = StmtKind::Return;
      if (!at(";")) s->value = parse_expr();
      return s;
    }
    ExprPtr lhs = parse_expr();
    if (accept("=")) {
      std::vector<ExprPtr> indices;
      Expr* target = lhs.get();
      while (target->kind == ExprKind::Index) {
        indices.insert(indices.begin(), std::move(target->children[1]));
        target = target->children[0].get();
      }
      if (target->kind != ExprKind::Var)
        throw SyntaxError(lhs->line, lhs->column, "left side of '=' is not assignable");
      s->name = target->text;
      s->kind = indices.empty() ? StmtKind::Assign : StmtKind::IndexAssign;
      s->indices = std::move(indices);
      s->value = parse_expr();
      return s;
    }
    s->kind = StmtKind::ExprStmt;
    s->value = std::move(lhs);
    return s;
  }

  static std::optional<BinaryOp> binary_op(const Token& t) {
    if (t.kind != TokenKind::Punct) return std::nullopt;
    static const std::unordered_map<std::string, BinaryOp> ops = {
        {"+", BinaryOp::Add}, {"-", BinaryOp::Sub}, {"*", BinaryOp::Mul}, {"/", BinaryOp::Div},
        {"%", BinaryOp::Mod}, {"<", BinaryOp::Lt},  {"<=", BinaryOp::Le}, {">", BinaryOp::Gt},
        {">=", BinaryOp::Ge}, {"==", BinaryOp::Eq}, {"!=", BinaryOp::Ne}, {"&&", BinaryOp::And},
        {"||", BinaryOp::Or}};
    auto it = ops.find(t.lexeme);
    if (it == ops.end()) return std::nullopt;
    return it->second;
  }

  ExprPtr parse_expr(int min_prec = 1) {
    ExprPtr lhs = parse_unary();
    while (true) {
      auto op = binary_op(peek());
      if (!op || precedence(*op) < min_prec) break;
      const Token& t = next();
      ExprPtr rhs = parse_expr(precedence(*op) + 1);
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Binary;
      e->binary_op = *op;
      e->line = t.line;
      e->column = lhs->column;
      e->children.push_back(std::move(lhs));
      e->children.push_back(std::move(rhs));
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (at("-") || at("!")) {
      const Token& t = next();
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Unary;
      e->unary_op = t.lexeme == "-" ? UnaryOp::Neg : UnaryOp::Not;
      e->line = t.line;
      e->column = t.column;
      e->children.push_back(parse_unary());
      return e;
    }
    return parse_postfix();
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_primary();
    while (at("[")) {
      const Token& t = next();
      auto idx = std::make_unique<Expr>();
      idx->kind = ExprKind::Index;
      idx->line = t.line;
      idx->column = e->column;
      idx->children.push_back(std::move(e));
      idx->children.push_back(parse_expr());
      expect("]");
      e = std::move(idx);
    }
    return e;
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    auto e = std::make_unique<Expr>();
    e->line = t.line;
    e->column = t.column;
    switch (t.kind) {
      case TokenKind::IntLiteral: {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.lexeme.data(), t.lexeme.data() + t.lexeme.size(), v);
        if (ec != std::errc() || v > std::numeric_limits<std::int32_t>::max())
          throw SyntaxError(t.line, t.column, "integer literal out of range: " + t.lexeme);
        e->kind = ExprKind::IntLit;
        e->int_value = static_cast<std::int32_t>(v);
        next();
        return e;
      }
      case TokenKind::FloatLiteral:
        e->kind = ExprKind::FloatLit;
        e->float_value = std::strtod(t.lexeme.c_str(), nullptr);
        e->text = t.lexeme;
        next();
        return e;
      case TokenKind::StringLiteral:
        e->kind = ExprKind::StrLit;
        e->text = t.lexeme;
        next();
        return e;
      case TokenKind::Identifier: {
        std::string name = next().lexeme;
        if (accept("(")) {
          e->kind = ExprKind::Call;
          e->text = std::move(name);
          if (!at(")")) {
            do {
              e->children.push_back(parse_expr());
            } while (accept(","));
          }
          expect(")");
        } else {
          e->kind = ExprKind::Var;
          e->text = std::move(name);
        }
        return e;
      }
      case TokenKind::Keyword:
        if (t.lexeme == "true" || t.lexeme == "false") {
          e->kind = ExprKind::BoolLit;
          e->bool_value = t.lexeme == "true";
          next();
          return e;
        }
        // Conversion builtins share their names with type keywords.
        if ((t.lexeme == "int" || t.lexeme == "float") && peek(1).lexeme == "(") {
          e->kind = ExprKind::Call;
          e->text = next().lexeme;
          expect("(");
          if (!at(")")) {
            do {
              e->children.push_back(parse_expr());
            } while (accept(","));
          }
          expect(")");
          return e;
        }
        break;
      case TokenKind::Punct:
        if (t.lexeme == "(") {
          next();
          ExprPtr inner = parse_expr();
          expect(")");
          return inner;
        }
        if (t.lexeme == "[") {
          next();
          e->kind = ExprKind::ArrayLit;
          if (!at("]")) {
            do {
              e->children.push_back(parse_expr());
            } while (accept(","));
          }
          expect("]");
          return e;
        }
        break;
      default:
        break;
    }
    fail(t, "expected an expression");
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::string file_;
  int last_stmt_line_ = 0;
};

// ---------------------------------------------------------------------------
// Static checking: name resolution, slot assignment, and typing.

struct Signature {
  std::vector<Type> params;
  Type result;
};

bool assignable(const Type& target, const Type& source) {
  return target == source || (target.is_float() && source.is_int());
}

class Checker {
 public:
  Checker(SourceProgram& program, const SourceProgram* externs) : program_(program) {
    if (externs) {
      for (const auto& f : externs->functions) add_signature(f, /*external=*/true);
    }
    for (const auto& f : program.functions) add_signature(f, false);
  }

  void run() {
    for (auto& f : program_.functions) check_function(f);
  }

 private:
  void add_signature(const FunctionDef& f, bool external) {
    if (is_builtin(f.name)) throw SyntaxError(f.line, 1, "function name '" + f.name + "' is a builtin");
    if (signatures_.count(f.name))
      throw SyntaxError(f.line, 1, "duplicate function '" + f.name + "'");
    Signature sig;
    for (const auto& p : f.params) sig.params.push_back(p.type);
    sig.result = f.return_type;
    signatures_[f.name] = sig;
    if (!external) {
      std::set<std::string> seen;
      for (const auto& p : f.params) {
        if (!seen.insert(p.name).second)
          throw SyntaxError(f.line, 1, "duplicate parameter '" + p.name + "' in '" + f.name + "'");
      }
    }
  }

  struct Local {
    int slot;
    Type type;
  };

  void check_function(FunctionDef& f) {
    fn_ = &f;
    scopes_.clear();
    scopes_.emplace_back();
    next_slot_ = 0;
    for (const auto& p : f.params) declare(p.name, p.type, f.line, 1);
    check_block(f.body);
    f.slot_count = next_slot_;
  }

  const Local* lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }

  int declare(const std::string& name, const Type& type, int line, int column) {
    if (lookup(name)) throw SyntaxError(line, column, "'" + name + "' is already declared");
    int slot = next_slot_++;
    scopes_.back()[name] = Local{slot, type};
    return slot;
  }

  void check_block(std::vector<StmtPtr>& body) {
    scopes_.emplace_back();
    for (auto& s : body) check_statement(*s);
    scopes_.pop_back();
  }

  void index_statement(const Stmt& s) {
    program_.line_index[s.line] = &s;
    program_.line_function[s.line] = fn_;
  }

  void check_statement(Stmt& s) {
    index_statement(s);
    switch (s.kind) {
      case StmtKind::Let: {
        Type t = check_expr(*s.value);
        if (t.is_void()) throw SyntaxError(s.line, s.column, "cannot bind a void value");
        if (s.declared) {
          if (!assignable(*s.declared, t))
            throw SyntaxError(s.line, s.column,
                              "cannot initialize " + to_string(*s.declared) + " '" + s.name +
                                  "' with " + to_string(t));
          t = *s.declared;
        }
        s.var_type = t;
        s.slot = declare(s.name, t, s.line, s.column);
        break;
      }
      case StmtKind::Assign: {
        const Local* l = require_local(s.name, s.line, s.column);
        Type t = check_expr(*s.value);
        if (!assignable(l->type, t))
          throw SyntaxError(s.line, s.column,
                            "cannot assign " + to_string(t) + " to " + to_string(l->type) + " '" +
                                s.name + "'");
        s.var_type = l->type;
        s.slot = l->slot;
        break;
      }
      case StmtKind::IndexAssign: {
        const Local* l = require_local(s.name, s.line, s.column);
        Type target = l->type;
        for (auto& idx : s.indices) {
          if (!target.is_array()) throw SyntaxError(s.line, s.column, "'" + s.name + "' is not indexable here");
          if (!check_expr(*idx).is_int()) throw SyntaxError(idx->line, idx->column, "index must be int");
          target = target.element();
        }
        Type t = check_expr(*s.value);
        if (!assignable(target, t))
          throw SyntaxError(s.line, s.column, "cannot store " + to_string(t) + " into " + to_string(target));
        s.var_type = l->type;
        s.slot = l->slot;
        break;
      }
      case StmtKind::If:
        require_bool(*s.cond);
        check_block(s.body);
        if (s.else_if) {
          // The nested if indexes itself.
          scopes_.emplace_back();
          check_statement(*s.else_body.front());
          scopes_.pop_back();
        } else {
          check_block(s.else_body);
        }
        break;
      case StmtKind::While:
        require_bool(*s.cond);
        check_block(s.body);
        break;
      case StmtKind::For:
        scopes_.emplace_back();
        check_header_part(*s.init);
        require_bool(*s.cond);
        check_header_part(*s.step);
        check_block(s.body);
        scopes_.pop_back();
        index_statement(s);
        break;
      case StmtKind::Return: {
        Type t = s.value ? check_expr(*s.value) : Type::scalar(BaseType::Void);
        if (fn_->return_type.is_void() ? !t.is_void() : !assignable(fn_->return_type, t))
          throw SyntaxError(s.line, s.column,
                            "return of " + to_string(t) + " from function returning " +
                                to_string(fn_->return_type));
        break;
      }
      case StmtKind::ExprStmt:
        check_expr(*s.value);
        break;
    }
  }

  // For-loop init/step share the header line; they must not re-index it.
  void check_header_part(Stmt& s) {
    auto saved = program_.line_index;
    check_statement(s);
    program_.line_index = std::move(saved);
  }

  const Local* require_local(const std::string& name, int line, int column) {
    const Local* l = lookup(name);
    if (!l) throw SyntaxError(line, column, "undefined name '" + name + "'");
    return l;
  }

  void require_bool(Expr& e) {
    Type t = check_expr(e);
    if (!t.is_bool()) throw SyntaxError(e.line, e.column, "condition must be bool, got " + to_string(t));
  }

  [[noreturn]] static void type_error(const Expr& e, const std::string& msg) {
    throw SyntaxError(e.line, e.column, msg);
  }

  Type check_expr(Expr& e) {
    e.type = infer(e);
    return e.type;
  }

  Type infer(Expr& e) {
    switch (e.kind) {
      case ExprKind::IntLit: return Type::scalar(BaseType::Int);
      case ExprKind::FloatLit: return Type::scalar(BaseType::Float);
      case ExprKind::BoolLit: return Type::scalar(BaseType::Bool);
      case ExprKind::StrLit: return Type::scalar(BaseType::Str);
      case ExprKind::Var: {
        const Local* l = require_local(e.text, e.line, e.column);
        e.slot = l->slot;
        return l->type;
      }
      case ExprKind::ArrayLit: {
        if (e.children.empty()) type_error(e, "empty array literal; use fill(0, v)");
        Type t = check_expr(*e.children[0]);
        for (std::size_t i = 1; i < e.children.size(); ++i) {
          Type u = check_expr(*e.children[i]);
          if (t == u) continue;
          if (t.is_numeric() && u.is_numeric()) {
            t = Type::scalar(BaseType::Float);
            continue;
          }
          type_error(*e.children[i], "array elements must share a type");
        }
        if (t.is_void()) type_error(e, "array of void");
        return t.array_of();
      }
      case ExprKind::Unary: {
        Type t = check_expr(*e.children[0]);
        if (e.unary_op == UnaryOp::Neg) {
          if (!t.is_numeric()) type_error(e, "'-' needs a number");
          return t;
        }
        if (!t.is_bool()) type_error(e, "'!' needs a bool");
        return t;
      }
      case ExprKind::Binary: {
        Type a = check_expr(*e.children[0]);
        Type b = check_expr(*e.children[1]);
        BinaryOp op = e.binary_op;
        if (is_arithmetic(op)) {
          if (op == BinaryOp::Add && a.is_str() && b.is_str()) return a;
          if (!a.is_numeric() || !b.is_numeric())
            type_error(e, std::string("'") + spelling(op) + "' needs numbers, got " + to_string(a) +
                              " and " + to_string(b));
          return a.is_int() && b.is_int() ? a : Type::scalar(BaseType::Float);
        }
        if (is_logical(op)) {
          if (!a.is_bool() || !b.is_bool()) type_error(e, std::string("'") + spelling(op) + "' needs bools");
          return a;
        }
        if (op == BinaryOp::Eq || op == BinaryOp::Ne) {
          bool ok = (a.is_numeric() && b.is_numeric()) || (a == b && (a.is_bool() || a.is_str()));
          if (!ok) type_error(e, "cannot compare " + to_string(a) + " with " + to_string(b));
          return Type::scalar(BaseType::Bool);
        }
        if (!a.is_numeric() || !b.is_numeric())
          type_error(e, std::string("'") + spelling(op) + "' needs numbers");
        return Type::scalar(BaseType::Bool);
      }
      case ExprKind::Index: {
        Type a = check_expr(*e.children[0]);
        Type i = check_expr(*e.children[1]);
        if (!a.is_array()) type_error(e, "indexing a non-array " + to_string(a));
        if (!i.is_int()) type_error(*e.children[1], "index must be int");
        return a.element();
      }
      case ExprKind::Call:
        return check_call(e);
    }
    return Type{};
  }

  Type check_call(Expr& e) {
    std::vector<Type> args;
    for (auto& c : e.children) args.push_back(check_expr(*c));
    auto arity = [&](std::size_t n) {
      if (args.size() != n)
        type_error(e, "'" + e.text + "' expects " + std::to_string(n) + " argument(s), got " +
                          std::to_string(args.size()));
    };
    auto numeric = [&](std::size_t i) {
      if (!args[i].is_numeric()) type_error(*e.children[i], "'" + e.text + "' needs a number");
    };
    const std::string& n = e.text;
    if (n == "sqrt" || n == "exp" || n == "float") {
      arity(1);
      numeric(0);
      return Type::scalar(BaseType::Float);
    }
    if (n == "int") {
      arity(1);
      numeric(0);
      return Type::scalar(BaseType::Int);
    }
    if (n == "abs") {
      arity(1);
      numeric(0);
      return args[0];
    }
    if (n == "min" || n == "max") {
      arity(2);
      numeric(0);
      numeric(1);
      return args[0].is_int() && args[1].is_int() ? args[0] : Type::scalar(BaseType::Float);
    }
    if (n == "len") {
      arity(1);
      if (!args[0].is_array() && !args[0].is_str()) type_error(e, "'len' needs an array or str");
      return Type::scalar(BaseType::Int);
    }
    if (n == "print") {
      arity(1);
      if (args[0].is_void()) type_error(e, "cannot print void");
      return Type::scalar(BaseType::Void);
    }
    if (n == "assert") {
      arity(2);
      if (!args[0].is_bool()) type_error(*e.children[0], "assert condition must be bool");
      if (!args[1].is_str()) type_error(*e.children[1], "assert message must be str");
      return Type::scalar(BaseType::Void);
    }
    if (n == "fill") {
      arity(2);
      if (!args[0].is_int()) type_error(*e.children[0], "fill length must be int");
      if (args[1].is_void()) type_error(e, "cannot fill with void");
      return args[1].array_of();
    }
    auto it = signatures_.find(n);
    if (it == signatures_.end()) type_error(e, "undefined function '" + n + "'");
    const Signature& sig = it->second;
    arity(sig.params.size());
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (!assignable(sig.params[i], args[i]))
        type_error(*e.children[i], "argument " + std::to_string(i + 1) + " of '" + n + "' expects " +
                                       to_string(sig.params[i]) + ", got " + to_string(args[i]));
    }
    return sig.result;
  }

  SourceProgram& program_;
  std::unordered_map<std::string, Signature> signatures_;
  FunctionDef* fn_ = nullptr;
  std::vector<std::unordered_map<std::string, Local>> scopes_;
  int next_slot_ = 0;
};

}  // namespace

bool is_builtin(std::string_view name) {
  for (auto b : kBuiltins) {
    if (b == name) return true;
  }
  return false;
}

SourceProgram parse(std::string_view text, const ParseOptions& options) {
  SourceProgram program;
  program.file = options.file;
  program.source_text = std::string(text);
  Parser parser(text, options.file);
  program.functions = parser.parse_program();
  Checker checker(program, options.externs);
  checker.run();
  return program;
}

}  // namespace patchlens::minilang
