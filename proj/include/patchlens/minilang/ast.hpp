#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace patchlens::minilang {

enum class BaseType { Int, Float, Bool, Str, Void };

// `array<array<int>>` is {Int, 2}; scalars have depth 0.
struct Type {
  BaseType base = BaseType::Void;
  int array_depth = 0;

  static Type scalar(BaseType b) { return Type{b, 0}; }
  bool is_array() const { return array_depth > 0; }
  bool is_int() const { return array_depth == 0 && base == BaseType::Int; }
  bool is_float() const { return array_depth == 0 && base == BaseType::Float; }
  bool is_numeric() const { return is_int() || is_float(); }
  bool is_bool() const { return array_depth == 0 && base == BaseType::Bool; }
  bool is_str() const { return array_depth == 0 && base == BaseType::Str; }
  bool is_void() const { return array_depth == 0 && base == BaseType::Void; }
  Type element() const { return Type{base, array_depth - 1}; }
  Type array_of() const { return Type{base, array_depth + 1}; }

  friend bool operator==(const Type&, const Type&) = default;
};

std::string to_string(const Type& t);

enum class UnaryOp { Neg, Not };
enum class BinaryOp { Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

const char* spelling(UnaryOp op);
const char* spelling(BinaryOp op);
int precedence(BinaryOp op);  // higher binds tighter
bool is_arithmetic(BinaryOp op);
bool is_relational(BinaryOp op);  // < <= > >= == !=
bool is_logical(BinaryOp op);

enum class ExprKind { IntLit, FloatLit, BoolLit, StrLit, ArrayLit, Var, Unary, Binary, Call, Index };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  ExprKind kind = ExprKind::IntLit;
  int line = 0;
  int column = 0;

  std::int32_t int_value = 0;
  double float_value = 0.0;
  bool bool_value = false;
  // Literal spelling (float/string literal), variable name, or callee name.
  std::string text;
  UnaryOp unary_op = UnaryOp::Neg;
  BinaryOp binary_op = BinaryOp::Add;
  // Operands, call arguments, array elements, or {array, index}.
  std::vector<ExprPtr> children;

  // Filled in by the checker.
  Type type;
  int slot = -1;  // local slot for Var

  ExprPtr clone() const;
};

enum class StmtKind { Let, Assign, IndexAssign, If, While, For, Return, ExprStmt };

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Stmt {
  StmtKind kind = StmtKind::ExprStmt;
  int line = 0;
  int column = 0;

  std::string name;                    // Let/Assign/IndexAssign target
  std::optional<Type> declared;        // Let with explicit type
  std::vector<ExprPtr> indices;        // IndexAssign subscripts, outermost first
  ExprPtr value;                       // Let/Assign/IndexAssign/Return/ExprStmt
  ExprPtr cond;                        // If/While/For
  StmtPtr init;                        // For
  StmtPtr step;                        // For
  std::vector<StmtPtr> body;           // If-then/While/For
  std::vector<StmtPtr> else_body;      // If
  bool else_if = false;                // else body is a single `else if`

  // Filled in by the checker.
  Type var_type;
  int slot = -1;

  StmtPtr clone() const;
};

struct Param {
  std::string name;
  Type type;
};

struct FunctionDef {
  std::string name;
  std::vector<Param> params;
  Type return_type = Type::scalar(BaseType::Void);
  std::vector<StmtPtr> body;
  int line = 0;       // line of the `fn` keyword
  int end_line = 0;   // line of the closing brace
  int slot_count = 0; // locals including parameters (slots 0..params-1)
  std::string file;
};

// A parsed and checked MiniLang compilation unit. Immutable once built; safe
// to share across concurrent runs.
struct SourceProgram {
  std::string file = "program.mini";
  std::string source_text;
  std::vector<FunctionDef> functions;
  // Every executable statement, keyed by its 1-based line. For-loop headers map
  // to the For statement (its init/step share that line).
  std::map<int, const Stmt*> line_index;
  // Statement line -> enclosing function.
  std::map<int, const FunctionDef*> line_function;

  const FunctionDef* find_function(const std::string& name) const;
  const Stmt* statement_at(int line) const;
  std::vector<std::string> source_lines() const;
  // Source line text with surrounding whitespace removed.
  std::string line_text(int line) const;
};

}  // namespace patchlens::minilang
