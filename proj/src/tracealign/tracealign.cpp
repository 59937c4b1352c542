#include "patchlens/tracealign.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "patchlens/errors.hpp"
#include "patchlens/minilang/lexer.hpp"

namespace patchlens::tracealign {

using minilang::InstrumentationPlan;

const char* to_string(Color c) {
  switch (c) {
    case Color::Neutral: return "neutral";
    case Color::Red: return "red";
    case Color::Green1: return "green_1";
    case Color::Green2: return "green_2";
    case Color::Green3: return "green_3";
    case Color::Green4: return "green_4";
  }
  return "neutral";
}

Color color_from_string(const std::string& s) {
  for (Color c : {Color::Neutral, Color::Red, Color::Green1, Color::Green2, Color::Green3, Color::Green4}) {
    if (s == to_string(c)) return c;
  }
  throw FormatError("unknown color '" + s + "'");
}

std::string Row::rendered(std::size_t column) const {
  const auto& v = values.at(column);
  return v ? *v : std::string(kAbsent);
}

// ---------------------------------------------------------------------------
// Name synthesis

namespace {

std::vector<minilang::Token> name_tokens(const std::string& s) {
  auto tokens = minilang::lex(s);
  tokens.pop_back();  // End
  return tokens;
}

std::vector<std::string> lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::size_t>> t(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      t[i][j] = a[i] == b[j] ? t[i + 1][j + 1] + 1 : std::max(t[i + 1][j], t[i][j + 1]);
    }
  }
  std::vector<std::string> out;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (a[i] == b[j]) {
      out.push_back(a[i]);
      ++i;
      ++j;
    } else if (t[i + 1][j] >= t[i][j + 1]) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

// Leftmost positions of `common` inside `tokens`.
std::vector<std::size_t> embed(const std::vector<std::string>& common, const std::vector<std::string>& tokens) {
  std::vector<std::size_t> pos;
  std::size_t j = 0;
  for (const auto& c : common) {
    while (tokens[j] != c) ++j;
    pos.push_back(j++);
  }
  return pos;
}

}  // namespace

std::string synthesize_name(const std::vector<std::string>& variants) {
  if (variants.empty()) return "";
  std::vector<std::string> unique;
  for (const auto& v : variants) {
    if (std::find(unique.begin(), unique.end(), v) == unique.end()) unique.push_back(v);
  }
  if (unique.size() == 1) return unique.front();

  std::vector<std::vector<minilang::Token>> toks;
  std::vector<std::vector<std::string>> lexemes;
  for (const auto& v : unique) {
    toks.push_back(name_tokens(v));
    std::vector<std::string> l;
    for (const auto& t : toks.back()) l.push_back(t.lexeme);
    lexemes.push_back(std::move(l));
  }
  std::vector<std::string> common = lexemes[0];
  for (std::size_t i = 1; i < lexemes.size(); ++i) common = lcs(common, lexemes[i]);

  std::size_t k = common.size();
  // gap[g] is true when some variant has tokens between common[g-1] and common[g].
  std::vector<bool> gap(k + 1, false);
  std::vector<std::vector<std::size_t>> positions;
  for (const auto& l : lexemes) {
    auto pos = embed(common, l);
    for (std::size_t g = 0; g <= k; ++g) {
      std::size_t lo = g == 0 ? 0 : pos[g - 1] + 1;
      std::size_t hi = g == k ? l.size() : pos[g];
      if (hi > lo) gap[g] = true;
    }
    positions.push_back(std::move(pos));
  }

  const auto& first = toks[0];
  const auto& first_pos = positions[0];
  std::string out;
  auto emit = [&out](const std::string& leading, const std::string& text) {
    out += out.empty() ? std::string{} : leading;
    out += text;
  };
  for (std::size_t g = 0; g <= k; ++g) {
    if (gap[g]) {
      // Spacing before the wildcard comes from the first variant with tokens here.
      std::string leading;
      for (std::size_t v = 0; v < toks.size(); ++v) {
        std::size_t lo = g == 0 ? 0 : positions[v][g - 1] + 1;
        std::size_t hi = g == k ? toks[v].size() : positions[v][g];
        if (hi > lo) {
          leading = toks[v][lo].leading;
          break;
        }
      }
      emit(leading, "*");
    }
    if (g < k) emit(first[first_pos[g]].leading, first[first_pos[g]].lexeme);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Colors and spans

Row assign_colors(Row row) {
  row.colors.assign(row.values.size(), Color::Neutral);
  if (row.values.empty()) return row;
  const auto& buggy = row.values[0];
  bool differs = false;
  for (std::size_t c = 1; c < row.values.size(); ++c) {
    if (row.values[c] && row.values[c] != buggy) differs = true;
  }
  if (!differs) return row;
  row.colors[0] = Color::Red;
  std::vector<std::string> seen;
  static constexpr Color kGreens[] = {Color::Green1, Color::Green2, Color::Green3, Color::Green4};
  for (std::size_t c = 1; c < row.values.size(); ++c) {
    const auto& v = row.values[c];
    if (!v || v == buggy) continue;
    auto it = std::find(seen.begin(), seen.end(), *v);
    std::size_t idx = static_cast<std::size_t>(it - seen.begin());
    if (it == seen.end()) seen.push_back(*v);
    row.colors[c] = kGreens[idx % 4];
  }
  return row;
}

Row merge_adjacent(Row row) {
  row.merge_spans.clear();
  int n = static_cast<int>(row.values.size());
  int start = 0;
  for (int c = 1; c <= n; ++c) {
    if (c == n || row.rendered(static_cast<std::size_t>(c)) != row.rendered(static_cast<std::size_t>(start))) {
      row.merge_spans.emplace_back(start, c - 1);
      start = c;
    }
  }
  return row;
}

// ---------------------------------------------------------------------------
// Alignment

namespace {

enum class Family { Var, Subexpr, Call };

Family family_of(ProbeKind k) {
  switch (k) {
    case ProbeKind::VarDef:
    case ProbeKind::VarUse: return Family::Var;
    case ProbeKind::Subexpr: return Family::Subexpr;
    case ProbeKind::Call: return Family::Call;
  }
  return Family::Var;
}

// Names that can stand for one another across versions.
std::string shape_of(Family f, const std::string& name) {
  if (f == Family::Call) return name.substr(0, name.find('('));
  std::set<std::string> idents;
  for (const auto& t : name_tokens(name)) {
    if (t.kind == minilang::TokenKind::Identifier) idents.insert(t.lexeme);
  }
  std::string out;
  for (const auto& i : idents) out += i + ",";
  return out;
}

struct Slot {
  Family family;
  std::vector<std::string> variants;
  std::vector<std::optional<std::string>> name_by_version;
  bool has_def = false;
  ProbeKind kind = ProbeKind::VarUse;
};

using LineKey = std::pair<std::string, int>;                            // function, line
using NameKey = std::tuple<std::string, int, Family, std::string>;      // + family, name

}  // namespace

std::vector<ComparisonTable> align(const AlignInput& input) {
  if (!input.buggy) throw AlignmentError("missing buggy log");
  std::vector<const TraceLog*> logs{input.buggy};
  logs.insert(logs.end(), input.patches.begin(), input.patches.end());
  std::size_t nv = logs.size();

  // Kind-family agreement across versions.
  std::map<std::tuple<std::string, int, std::string>, std::pair<Family, std::size_t>> families;
  auto check = [&](const std::string& fn, int line, const std::string& name, ProbeKind kind, std::size_t v) {
    auto key = std::make_tuple(fn, line, name);
    Family f = family_of(kind);
    auto [it, inserted] = families.emplace(key, std::make_pair(f, v));
    if (!inserted && it->second.first != f)
      throw AlignmentError("versions " + logs[it->second.second]->version + " and " + logs[v]->version +
                           " disagree on the kind of '" + name + "' at " + fn + ":" + std::to_string(line));
  };
  for (std::size_t v = 0; v < nv; ++v) {
    for (const auto& r : logs[v]->records) check(r.function, r.line, r.name, r.kind, v);
    if (v < input.plans.size() && input.plans[v]) {
      for (const auto& p : input.plans[v]->probes) check(p.function, p.line, p.name, p.kind, v);
    }
  }

  // Values per version and name, plus each version's name order per line.
  std::vector<std::map<NameKey, std::map<int, std::string>>> values(nv);
  std::vector<std::map<LineKey, std::vector<std::pair<Family, std::string>>>> order(nv);
  std::map<NameKey, bool> defined;
  for (std::size_t v = 0; v < nv; ++v) {
    for (const auto& r : logs[v]->records) {
      Family f = family_of(r.kind);
      NameKey key{r.function, r.line, f, r.name};
      auto& vals = values[v][key];
      if (vals.empty()) order[v][{r.function, r.line}].emplace_back(f, r.name);
      vals[r.occurrence] = r.value;
      if (r.kind == ProbeKind::VarDef) defined[key] = true;
    }
  }

  std::map<LineKey, std::vector<Slot>> slots;
  for (std::size_t v = 0; v < nv; ++v) {
    for (const auto& [line_key, names] : order[v]) {
      auto& line_slots = slots[line_key];
      std::vector<std::pair<Family, std::string>> pending;
      for (const auto& [fam, name] : names) {
        bool placed = false;
        for (auto& s : line_slots) {
          if (s.family != fam || s.name_by_version[v]) continue;
          if (std::find(s.variants.begin(), s.variants.end(), name) == s.variants.end()) continue;
          s.name_by_version[v] = name;
          placed = true;
          break;
        }
        if (!placed) pending.emplace_back(fam, name);
      }
      for (const auto& [fam, name] : pending) {
        Slot* target = nullptr;
        if (fam != Family::Var) {
          for (auto& s : line_slots) {
            if (s.family == fam && !s.name_by_version[v] && shape_of(fam, s.variants.front()) == shape_of(fam, name)) {
              target = &s;
              break;
            }
          }
        }
        if (!target) {
          line_slots.push_back(Slot{fam, {}, std::vector<std::optional<std::string>>(nv), false, ProbeKind::VarUse});
          target = &line_slots.back();
        }
        target->variants.push_back(name);
        target->name_by_version[v] = name;
      }
    }
  }

  std::map<std::string, std::string> files(input.files.begin(), input.files.end());
  std::vector<std::string> columns{"buggy"};
  for (const auto* p : input.patches) columns.push_back(p->version);

  std::vector<ComparisonTable> tables;
  for (const auto& frame : input.frames) {
    ComparisonTable table;
    table.frame = frame;
    table.columns = columns;
    struct Keyed {
      int line;
      int occurrence;
      std::size_t seq;
      Row row;
    };
    std::vector<Keyed> keyed;
    for (const auto& [line_key, line_slots] : slots) {
      if (line_key.first != frame.function) continue;
      for (std::size_t si = 0; si < line_slots.size(); ++si) {
        const Slot& s = line_slots[si];
        std::vector<const std::map<int, std::string>*> series(nv, nullptr);
        int last = 0;
        bool has_def = false;
        for (std::size_t v = 0; v < nv; ++v) {
          if (!s.name_by_version[v]) continue;
          NameKey key{line_key.first, line_key.second, s.family, *s.name_by_version[v]};
          auto it = values[v].find(key);
          if (it == values[v].end()) continue;
          series[v] = &it->second;
          last = std::max(last, it->second.rbegin()->first);
          has_def = has_def || defined.count(key);
        }
        auto at = [&](std::size_t v, int k) -> std::optional<std::string> {
          if (!series[v]) return std::nullopt;
          auto it = series[v]->find(k);
          if (it == series[v]->end()) return std::nullopt;
          return it->second;
        };
        int chosen = last;
        for (int k = 1; k <= last && chosen == last; ++k) {
          auto b = at(0, k);
          for (std::size_t v = 1; v < nv; ++v) {
            if (at(v, k) != b) {
              chosen = k;
              break;
            }
          }
        }
        Row row;
        row.line = line_key.second;
        row.occurrence = chosen;
        row.display_name = synthesize_name(s.variants);
        row.kind = s.family == Family::Var ? (has_def ? ProbeKind::VarDef : ProbeKind::VarUse)
                   : s.family == Family::Subexpr ? ProbeKind::Subexpr
                                                 : ProbeKind::Call;
        for (std::size_t v = 0; v < nv; ++v) row.values.push_back(at(v, chosen));
        auto f = files.find(frame.function);
        row.nav_target = NavTarget{f == files.end() ? std::string{} : f->second, row.line};
        row = merge_adjacent(assign_colors(std::move(row)));
        keyed.push_back(Keyed{row.line, row.occurrence, si, std::move(row)});
      }
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
      return std::tie(a.line, a.occurrence, a.seq) < std::tie(b.line, b.occurrence, b.seq);
    });
    for (auto& k : keyed) table.rows.push_back(std::move(k.row));
    tables.push_back(std::move(table));
  }
  return tables;
}

// ---------------------------------------------------------------------------
// Trace log text

std::string write_trace(const TraceLog& log) {
  std::string out;
  for (const auto& r : log.records) {
    out += log.version + '\t' + r.function + '\t' + std::to_string(r.line) + '\t' + std::to_string(r.occurrence) +
           '\t' + minilang::to_string(r.kind) + '\t' + r.name + '\t' + r.value + '\n';
  }
  return out;
}

std::vector<TraceLog> read_trace(const std::string& text) {
  std::vector<TraceLog> logs;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (int i = 0; i < 6; ++i) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) throw FormatError("trace line " + std::to_string(number) + ": expected 7 fields");
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    fields.push_back(line.substr(start));
    ProbeRecord r;
    r.function = fields[1];
    try {
      std::size_t used = 0;
      r.line = std::stoi(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("line");
      r.occurrence = std::stoi(fields[3], &used);
      if (used != fields[3].size() || r.occurrence < 1) throw std::invalid_argument("occurrence");
    } catch (const std::exception&) {
      throw FormatError("trace line " + std::to_string(number) + ": bad line or occurrence");
    }
    r.kind = minilang::probe_kind_from_string(fields[4]);
    r.name = fields[5];
    r.value = fields[6];
    auto it = std::find_if(logs.begin(), logs.end(), [&](const TraceLog& l) { return l.version == fields[0]; });
    if (it == logs.end()) {
      logs.push_back(TraceLog{fields[0], {}});
      it = logs.end() - 1;
    }
    it->records.push_back(std::move(r));
  }
  return logs;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const Row& row) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : row.values) values.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  nlohmann::json colors = nlohmann::json::array();
  for (Color c : row.colors) colors.push_back(to_string(c));
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& [a, b] : row.merge_spans) spans.push_back({a, b});
  return {
      {"line", row.line},
      {"occurrence", row.occurrence},
      {"display_name", row.display_name},
      {"kind", minilang::to_string(row.kind)},
      {"values", values},
      {"colors", colors},
      {"merge_spans", spans},
      {"nav_target", {{"file", row.nav_target.file}, {"line", row.nav_target.line}}},
  };
}

nlohmann::json to_json(const ComparisonTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) rows.push_back(to_json(r));
  return {
      {"frame", {{"function", table.frame.function}, {"line", table.frame.line}}},
      {"columns", table.columns},
      {"rows", rows},
  };
}

nlohmann::json to_json(const std::vector<ComparisonTable>& tables) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : tables) out.push_back(to_json(t));
  return out;
}

ComparisonTable table_from_json(const nlohmann::json& j) {
  try {
    ComparisonTable t;
    t.frame.function = j.at("frame").at("function").get<std::string>();
    t.frame.line = j.at("frame").at("line").get<int>();
    t.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
      Row row;
      row.line = r.at("line").get<int>();
      row.occurrence = r.at("occurrence").get<int>();
      row.display_name = r.at("display_name").get<std::string>();
      row.kind = minilang::probe_kind_from_string(r.at("kind").get<std::string>());
      for (const auto& v : r.at("values")) {
        row.values.push_back(v.is_null() ? std::nullopt : std::optional<std::string>(v.get<std::string>()));
      }
      for (const auto& c : r.at("colors")) row.colors.push_back(color_from_string(c.get<std::string>()));
      for (const auto& s : r.at("merge_spans")) row.merge_spans.emplace_back(s.at(0).get<int>(), s.at(1).get<int>());
      row.nav_target.file = r.at("nav_target").at("file").get<std::string>();
      row.nav_target.line = r.at("nav_target").at("line").get<int>();
      t.rows.push_back(std::move(row));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("table json: ") + e.what());
  }
}

}  // namespace patchlens::tracealign
