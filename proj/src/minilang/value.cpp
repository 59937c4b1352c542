#include "patchlens/minilang/value.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <limits>

namespace patchlens::minilang {

namespace {

std::int32_t narrow(std::int64_t v) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(static_cast<std::uint64_t>(v)));
}

void append_quoted(std::string& out, const std::string& s) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
}

void render_into(std::string& out, const Value& v) {
  if (v.is_void()) {
    out += "void";
  } else if (v.is_int()) {
    out += std::to_string(v.as_int());
  } else if (v.is_float()) {
    out += render_float(v.as_float());
  } else if (v.is_bool()) {
    out += v.as_bool() ? "true" : "false";
  } else if (v.is_str()) {
    append_quoted(out, v.as_str());
  } else {
    out.push_back('[');
    bool first = true;
    for (const auto& e : v.as_array()) {
      if (!first) out += ", ";
      first = false;
      render_into(out, e);
    }
    out.push_back(']');
  }
}

void digest_into(std::uint32_t& h, const Value& v) {
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 16777619u;
    }
  };
  auto tag = static_cast<unsigned char>(v.data.index());
  mix(&tag, 1);
  if (v.is_int()) {
    auto x = v.as_int();
    mix(&x, sizeof x);
  } else if (v.is_float()) {
    double d = v.as_float();
    if (std::isnan(d)) d = std::numeric_limits<double>::quiet_NaN();
    mix(&d, sizeof d);
  } else if (v.is_bool()) {
    unsigned char b = v.as_bool() ? 1 : 0;
    mix(&b, 1);
  } else if (v.is_str()) {
    mix(v.as_str().data(), v.as_str().size());
  } else if (v.is_array()) {
    auto n = static_cast<std::uint64_t>(v.as_array().size());
    mix(&n, sizeof n);
    for (const auto& e : v.as_array()) digest_into(h, e);
  }
}

}  // namespace

std::string render_summary(const Value& v, std::size_t max_elements) {
  if (!v.is_array() || v.as_array().size() <= max_elements) {
    if (!v.is_array()) return render(v);
    std::string out = "[";
    const auto& a = v.as_array();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i) out += ", ";
      out += render_summary(a[i], max_elements);
    }
    return out + "]";
  }
  const auto& a = v.as_array();
  std::uint32_t h = 2166136261u;
  digest_into(h, v);
  char hex[9];
  std::snprintf(hex, sizeof hex, "%08x", h);
  std::string out = "[";
  std::size_t head = max_elements > 1 ? max_elements - 1 : 1;
  for (std::size_t i = 0; i < head; ++i) out += render_summary(a[i], max_elements) + ", ";
  out += "..., " + render_summary(a.back(), max_elements) + "] (len=" + std::to_string(a.size()) +
         ", #" + hex + ")";
  return out;
}

std::string render_float(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "Infinity" : "-Infinity";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), d);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string render(const Value& v) {
  std::string out;
  render_into(out, v);
  return out;
}

std::int32_t wrap_add(std::int32_t a, std::int32_t b) { return narrow(std::int64_t{a} + b); }
std::int32_t wrap_sub(std::int32_t a, std::int32_t b) { return narrow(std::int64_t{a} - b); }
std::int32_t wrap_mul(std::int32_t a, std::int32_t b) { return narrow(std::int64_t{a} * b); }
std::int32_t wrap_neg(std::int32_t a) { return narrow(-std::int64_t{a}); }
std::int32_t wrap_div(std::int32_t a, std::int32_t b) { return narrow(std::int64_t{a} / b); }
std::int32_t wrap_mod(std::int32_t a, std::int32_t b) { return narrow(std::int64_t{a} % b); }

}  // namespace patchlens::minilang
