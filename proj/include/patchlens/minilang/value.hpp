#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace patchlens::minilang {

struct Value;
using Array = std::vector<Value>;

// Runtime value. Arrays have value semantics (assignment copies).
struct Value {
  std::variant<std::monostate, std::int32_t, double, bool, std::string, Array> data;

  Value() = default;
  static Value of_int(std::int32_t v) { return Value{v}; }
  static Value of_float(double v) { return Value{v}; }
  static Value of_bool(bool v) { return Value{v}; }
  static Value of_str(std::string v) { return Value{std::move(v)}; }
  static Value of_array(Array v) { return Value{std::move(v)}; }

  bool is_void() const { return std::holds_alternative<std::monostate>(data); }
  bool is_int() const { return std::holds_alternative<std::int32_t>(data); }
  bool is_float() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_str() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }

  std::int32_t as_int() const { return std::get<std::int32_t>(data); }
  double as_float() const { return std::get<double>(data); }
  bool as_bool() const { return std::get<bool>(data); }
  const std::string& as_str() const { return std::get<std::string>(data); }
  const Array& as_array() const { return std::get<Array>(data); }
  Array& as_array() { return std::get<Array>(data); }
  // Numeric value widened to double.
  double as_number() const { return is_int() ? static_cast<double>(as_int()) : as_float(); }

 private:
  template <typename T>
  explicit Value(T v) : data(std::move(v)) {}
};

// Shortest round-trip rendering used for printing and trace logs:
// ints in decimal; floats via shortest round-trip with a ".0" suffix when the
// digits alone would read as an integer; "NaN", "Infinity", "-Infinity";
// strings quoted with escapes; arrays as "[a, b]".
std::string render(const Value& v);
std::string render_float(double d);
// Like render, but arrays longer than `max_elements` collapse to their first
// and last elements plus the length and a 32-bit digest of every element, so
// logging large arrays stays cheap while distinct arrays still render apart.
std::string render_summary(const Value& v, std::size_t max_elements = 8);

// Java-style 32-bit wrapping arithmetic.
std::int32_t wrap_add(std::int32_t a, std::int32_t b);
std::int32_t wrap_sub(std::int32_t a, std::int32_t b);
std::int32_t wrap_mul(std::int32_t a, std::int32_t b);
std::int32_t wrap_neg(std::int32_t a);
// Truncating division; INT_MIN / -1 wraps to INT_MIN. `b` must be non-zero.
std::int32_t wrap_div(std::int32_t a, std::int32_t b);
std::int32_t wrap_mod(std::int32_t a, std::int32_t b);

}  // namespace patchlens::minilang
