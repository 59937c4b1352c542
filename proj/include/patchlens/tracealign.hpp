#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "patchlens/minilang/interpreter.hpp"
#include "patchlens/minilang/probe.hpp"

namespace patchlens::tracealign {

using minilang::ProbeKind;
using minilang::ProbeRecord;
using minilang::TraceLog;

enum class Color { Neutral, Red, Green1, Green2, Green3, Green4 };

const char* to_string(Color c);  // "neutral", "red", "green_1", ...
Color color_from_string(const std::string& s);

// Rendering of an absent cell.
inline constexpr const char* kAbsent = "-";

struct NavTarget {
  std::string file;
  int line = 0;
  friend bool operator==(const NavTarget&, const NavTarget&) = default;
};

struct Row {
  int line = 0;
  int occurrence = 1;
  std::string display_name;
  ProbeKind kind = ProbeKind::VarUse;
  std::vector<std::optional<std::string>> values;  // buggy first
  std::vector<std::pair<int, int>> merge_spans;   // inclusive column ranges
  std::vector<Color> colors;
  NavTarget nav_target;

  std::string rendered(std::size_t column) const;
  friend bool operator==(const Row&, const Row&) = default;
};

struct ComparisonTable {
  minilang::StackFrame frame;
  std::vector<std::string> columns;  // "buggy", then patch ids
  std::vector<Row> rows;
  friend bool operator==(const ComparisonTable&, const ComparisonTable&) = default;
};

// Common tokens of all variants with each differing run replaced by "*".
std::string synthesize_name(const std::vector<std::string>& variants);

struct AlignInput {
  const TraceLog* buggy = nullptr;
  std::vector<const TraceLog*> patches;  // ranked order
  // Per-version plans (buggy first); probe kinds are cross-checked when given.
  std::vector<const minilang::InstrumentationPlan*> plans;
  std::vector<minilang::StackFrame> frames;  // innermost first
  // Function name -> source file, for navigation targets.
  std::vector<std::pair<std::string, std::string>> files;
};

// Rows with occurrence selection, colors, and merge spans applied. Throws
// AlignmentError when versions disagree on a probe's kind family.
std::vector<ComparisonTable> align(const AlignInput& input);

Row assign_colors(Row row);
Row merge_adjacent(Row row);

// Line-delimited trace log text, one record per line.
std::string write_trace(const TraceLog& log);
// Parses concatenated trace text into logs by version, in first-seen order.
// Throws FormatError on malformed lines.
std::vector<TraceLog> read_trace(const std::string& text);

nlohmann::json to_json(const Row& row);
nlohmann::json to_json(const ComparisonTable& table);
nlohmann::json to_json(const std::vector<ComparisonTable>& tables);
ComparisonTable table_from_json(const nlohmann::json& j);

}  // namespace patchlens::tracealign
