#include "patchlens/minilang/ast.hpp"

namespace patchlens::minilang {

std::string to_string(const Type& t) {
  std::string base;
  switch (t.base) {
    case BaseType::Int: base = "int"; break;
    case BaseType::Float: base = "float"; break;
    case BaseType::Bool: base = "bool"; break;
    case BaseType::Str: base = "str"; break;
    case BaseType::Void: base = "void"; break;
  }
  for (int i = 0; i < t.array_depth; ++i) base = "array<" + base + ">";
  return base;
}

const char* spelling(UnaryOp op) { return op == UnaryOp::Neg ? "-" : "!"; }

const char* spelling(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
  }
  return "?";
}

int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return 1;
    case BinaryOp::And: return 2;
    case BinaryOp::Eq:
    case BinaryOp::Ne: return 3;
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return 4;
    case BinaryOp::Add:
    case BinaryOp::Sub: return 5;
    case BinaryOp::Mul:
    case BinaryOp::Div:
    case BinaryOp::Mod: return 6;
  }
  return 0;
}

bool is_arithmetic(BinaryOp op) { return precedence(op) >= 5; }
bool is_relational(BinaryOp op) { return precedence(op) == 3 || precedence(op) == 4; }
bool is_logical(BinaryOp op) { return op == BinaryOp::And || op == BinaryOp::Or; }

ExprPtr Expr::clone() const {
  auto e = std::make_unique<Expr>();
  e->kind = kind;
  e->line = line;
  e->column = column;
  e->int_value = int_value;
  e->float_value = float_value;
  e->bool_value = bool_value;
  e->text = text;
  e->unary_op = unary_op;
  e->binary_op = binary_op;
  e->type = type;
  e->slot = slot;
  for (const auto& c : children) e->children.push_back(c->clone());
  return e;
}

StmtPtr Stmt::clone() const {
  auto s = std::make_unique<Stmt>();
  s->kind = kind;
  s->line = line;
  s->column = column;
  s->name = name;
  s->declared = declared;
  for (const auto& i : indices) s->indices.push_back(i->clone());
  if (value) s->value = value->clone();
  if (cond) s->cond = cond->clone();
  if (init) s->init = init->clone();
  if (step) s->step = step->clone();
  for (const auto& b : body) s->body.push_back(b->clone());
  for (const auto& b : else_body) s->else_body.push_back(b->clone());
  s->else_if = else_if;
  s->var_type = var_type;
  s->slot = slot;
  return s;
}

const FunctionDef* SourceProgram::find_function(const std::string& name) const {
  for (const auto& f : functions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const Stmt* SourceProgram::statement_at(int line) const {
  auto it = line_index.find(line);
  return it == line_index.end() ? nullptr : it->second;
}

std::vector<std::string> SourceProgram::source_lines() const {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : source_text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

std::string SourceProgram::line_text(int line) const {
  auto lines = source_lines();
  if (line < 1 || line > static_cast<int>(lines.size())) return {};
  const std::string& l = lines[line - 1];
  auto b = l.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = l.find_last_not_of(" \t\r");
  return l.substr(b, e - b + 1);
}

}  // namespace patchlens::minilang
