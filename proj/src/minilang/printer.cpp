#include "patchlens/minilang/printer.hpp"

#include "patchlens/minilang/value.hpp"

namespace patchlens::minilang {
namespace {

// Unary and postfix forms bind tighter than every binary operator.
constexpr int kUnaryPrecedence = 100;
constexpr int kAtomPrecedence = 200;

int expr_precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Binary: return precedence(e.binary_op);
    case ExprKind::Unary: return kUnaryPrecedence;
    default: return kAtomPrecedence;
  }
}

void print_into(std::string& out, const Expr& e);

void print_operand(std::string& out, const Expr& e, int min_precedence) {
  if (expr_precedence(e) < min_precedence) {
    out.push_back('(');
    print_into(out, e);
    out.push_back(')');
  } else {
    print_into(out, e);
  }
}

void print_into(std::string& out, const Expr& e) {
  switch (e.kind) {
    case ExprKind::IntLit:
      out += std::to_string(e.int_value);
      break;
    case ExprKind::FloatLit:
      out += e.text.empty() ? render_float(e.float_value) : e.text;
      break;
    case ExprKind::BoolLit:
      out += e.bool_value ? "true" : "false";
      break;
    case ExprKind::StrLit:
    case ExprKind::Var:
      out += e.text;
      break;
    case ExprKind::ArrayLit: {
      out.push_back('[');
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) out += ", ";
        print_into(out, *e.children[i]);
      }
      out.push_back(']');
      break;
    }
    case ExprKind::Call: {
      out += e.text;
      out.push_back('(');
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) out += ", ";
        print_into(out, *e.children[i]);
      }
      out.push_back(')');
      break;
    }
    case ExprKind::Index:
      print_operand(out, *e.children[0], kAtomPrecedence);
      out.push_back('[');
      print_into(out, *e.children[1]);
      out.push_back(']');
      break;
    case ExprKind::Unary:
      out += spelling(e.unary_op);
      print_operand(out, *e.children[0], kUnaryPrecedence);
      break;
    case ExprKind::Binary: {
      // Left-associative: the right operand needs parentheses at equal precedence.
      int p = precedence(e.binary_op);
      print_operand(out, *e.children[0], p);
      out.push_back(' ');
      out += spelling(e.binary_op);
      out.push_back(' ');
      print_operand(out, *e.children[1], p + 1);
      break;
    }
  }
}

std::string simple_statement(const Stmt& s) {
  std::string out;
  switch (s.kind) {
    case StmtKind::Let:
      out = "let " + s.name;
      if (s.declared) out += ": " + to_string(*s.declared);
      out += " = " + print_expr(*s.value);
      break;
    case StmtKind::Assign:
      out = s.name + " = " + print_expr(*s.value);
      break;
    case StmtKind::IndexAssign:
      out = s.name;
      for (const auto& idx : s.indices) out += "[" + print_expr(*idx) + "]";
      out += " = " + print_expr(*s.value);
      break;
    case StmtKind::Return:
      out = s.value ? "return " + print_expr(*s.value) : "return";
      break;
    case StmtKind::ExprStmt:
      out = print_expr(*s.value);
      break;
    default:
      break;
  }
  return out;
}

}  // namespace

std::string print_expr(const Expr& e) {
  std::string out;
  print_into(out, e);
  return out;
}

std::string print_statement_line(const Stmt& s) {
  switch (s.kind) {
    case StmtKind::If:
      return "if (" + print_expr(*s.cond) + ") {";
    case StmtKind::While:
      return "while (" + print_expr(*s.cond) + ") {";
    case StmtKind::For:
      return "for (" + simple_statement(*s.init) + "; " + print_expr(*s.cond) + "; " +
             simple_statement(*s.step) + ") {";
    default:
      return simple_statement(s) + ";";
  }
}

}  // namespace patchlens::minilang
