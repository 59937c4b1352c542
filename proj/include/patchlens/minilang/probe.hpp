#pragma once

#include <string>
#include <tuple>
#include <vector>

namespace patchlens::minilang {

enum class ProbeKind { VarDef, VarUse, Subexpr, Call };

const char* to_string(ProbeKind k);
// Inverse of to_string ("var-def", "var-use", "subexpr", "call"); throws
// FormatError on anything else.
ProbeKind probe_kind_from_string(const std::string& s);

// One instrumentation point. Identity is (function, line, kind, name);
// `column` only orders probes that share a line.
struct Probe {
  std::string function;
  int line = 0;
  ProbeKind kind = ProbeKind::VarUse;
  std::string name;
  int column = 0;

  auto key() const { return std::tie(function, line, kind, name); }
  friend bool operator==(const Probe& a, const Probe& b) { return a.key() == b.key(); }
  friend bool operator<(const Probe& a, const Probe& b) { return a.key() < b.key(); }
};

// Set of probes, kept sorted by identity and free of duplicates.
struct InstrumentationPlan {
  std::vector<Probe> probes;

  void add(Probe p);
  bool empty() const { return probes.empty(); }
  std::size_t size() const { return probes.size(); }
  bool contains(const Probe& p) const;
};

struct ProbeRecord {
  std::string function;
  int line = 0;
  int occurrence = 1;  // 1-based, per (function, line, name) in execution order
  std::string name;
  ProbeKind kind = ProbeKind::VarUse;
  std::string value;  // rendered

  friend bool operator==(const ProbeRecord&, const ProbeRecord&) = default;
};

struct TraceLog {
  std::string version;  // "buggy" or a patch id
  std::vector<ProbeRecord> records;

  friend bool operator==(const TraceLog&, const TraceLog&) = default;
};

}  // namespace patchlens::minilang
