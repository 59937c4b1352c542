#include "patchlens/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "patchlens/bench.hpp"
#include "patchlens/cluster.hpp"
#include "patchlens/errors.hpp"
#include "patchlens/http.hpp"
#include "patchlens/pipeline.hpp"

namespace patchlens::cli {

using nlohmann::json;

namespace {

struct Options {
  std::string bug;
  std::string corpus;
  std::string patches;
  std::string out;
  std::string meta_out;
  std::string trace_out;
  std::string static_dir;
  std::string host = "127.0.0.1";
  std::uint64_t seed = 1;
  std::size_t max_reps = 5;
  int port = 7380;
  std::string format = "text";
};

void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw CorpusError("cannot write " + o.out);
  f << text;
}

bench::BugCase load(const Options& o) {
  bench::BugCase bug = bench::load_bug(o.bug);
  if (!o.patches.empty()) {
    bug.patches = bench::read_patches(o.patches);
    bug.patches.validate();
  }
  return bug;
}

std::string tag(tracealign::Color c) {
  switch (c) {
    case tracealign::Color::Neutral:
      return "";
    case tracealign::Color::Red:
      return "[R] ";
    default:
      return "[G" + std::to_string(static_cast<int>(c) - static_cast<int>(tracealign::Color::Green1) + 1) + "] ";
  }
}

std::string pad(const std::string& s, std::size_t w) {
  // Column widths count code points, not bytes.
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return s + std::string(w > n ? w - n : 0, ' ');
}

std::size_t width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  auto bug = std::make_shared<const bench::BugCase>(load(o));
  auto sampled = cluster::sample(bug->patches, bug->buggy_context(), o.max_reps);
  std::vector<std::string> reps;
  for (const auto& r : sampled.ranked) reps.push_back(r.patch_id);
  pipeline::Analyzer analyzer(bug);
  auto tables = analyzer.tables(reps);
  if (!o.trace_out.empty()) {
    std::ofstream f(o.trace_out, std::ios::binary);
    if (!f) throw CorpusError("cannot write " + o.trace_out);
    f << tracealign::write_trace(analyzer.buggy().log);
    for (const auto& id : reps) f << tracealign::write_trace(analyzer.patch(id).log);
  }
  emit(o, out, o.format == "json" ? tracealign::to_json(tables).dump(2) + "\n" : render_tables(tables));
  return 0;
}

int cmd_rank(const Options& o, std::ostream& out) {
  bench::BugCase bug = load(o);
  auto sampled = cluster::sample(bug.patches, bug.buggy_context(), o.max_reps);
  json list = json::array();
  std::ostringstream text;
  text << "bug " << bug.id << " (line " << bug.buggy_line << "): " << bug.buggy_context().buggy_statement_text << "\n";
  for (std::size_t i = 0; i < sampled.ranked.size(); ++i) {
    const auto& r = sampled.ranked[i];
    const Patch& p = bug.patches.at(r.patch_id);
    const auto& members = sampled.clusters[i].members;
    list.push_back({{"cluster_id", "c" + std::to_string(i + 1)},
                    {"representative", r.patch_id},
                    {"replacement", p.replacement_text},
                    {"original_rank", p.original_rank},
                    {"distance", r.distance},
                    {"size", members.size()},
                    {"members", members}});
    text << (i + 1) << ". c" << (i + 1) << "  " << r.patch_id << "  d=" << r.distance << "  size=" << members.size()
         << "  " << p.replacement_text << "\n";
  }
  emit(o, out, o.format == "json" ? json{{"bug_id", bug.id}, {"representatives", list}}.dump(2) + "\n" : text.str());
  return 0;
}

int cmd_gen(const Options& o, std::ostream& out) {
  std::filesystem::path dir(o.bug);
  bench::Sources src = bench::load_sources(dir);
  bench::BugMeta meta = bench::read_meta(dir / "meta.json");
  bench::MutationConfig config;
  config.correct_replacement = meta.correct_replacement;
  PatchSet patches = bench::generate_patches(*src.program, meta.buggy_line, src.tests, config, o.seed);
  spdlog::info("{}: {} plausible patches", dir.filename().string(), patches.size());
  if (meta.correct_replacement) {
    auto tokens = tokenize(*meta.correct_replacement);
    meta.correct_patch_id.clear();
    for (const auto& p : patches.patches) {
      if (tokenize(p.replacement_text) == tokens) meta.correct_patch_id = p.id;
    }
    if (meta.correct_patch_id.empty())
      throw NoPlausiblePatch("correct replacement '" + *meta.correct_replacement + "' does not pass every test");
  }
  if (!o.meta_out.empty()) {
    std::ofstream f(o.meta_out, std::ios::binary);
    if (!f) throw CorpusError("cannot write " + o.meta_out);
    f << bench::meta_to_json(meta).dump(2) << "\n";
  }
  emit(o, out, bench::patches_to_json(patches).dump(2) + "\n");
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  auto corpus = bench::load_corpus(o.corpus);
  auto report = bench::evaluate_ranking(corpus, o.max_reps);
  emit(o, out, o.format == "json" ? bench::report_to_json(report).dump(2) + "\n" : bench::report_to_text(report));
  return 0;
}

int cmd_serve(const Options& o, std::ostream& out) {
  service::SessionService svc(bench::load_corpus(o.corpus), o.max_reps);
  http::Server server(svc, o.static_dir);
  out << "serving " << o.corpus << " on http://" << o.host << ":" << o.port << "\n" << std::flush;
  if (!server.listen(o.host, o.port)) throw Error("ServeError", "cannot listen on port " + std::to_string(o.port));
  return 0;
}

}  // namespace

std::string render_tables(const std::vector<tracealign::ComparisonTable>& tables) {
  std::ostringstream os;
  for (const auto& t : tables) {
    os << "== " << t.frame.function << ":" << t.frame.line << " ==\n";
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header{"line", "name"};
    header.insert(header.end(), t.columns.begin(), t.columns.end());
    grid.push_back(header);
    for (const auto& r : t.rows) {
      std::vector<std::string> cells{std::to_string(r.line) + "#" + std::to_string(r.occurrence), r.display_name};
      for (std::size_t c = 0; c < r.values.size(); ++c) {
        bool continued = false;
        for (const auto& [a, b] : r.merge_spans) continued |= static_cast<int>(c) > a && static_cast<int>(c) <= b;
        cells.push_back(continued ? "<<" : tag(r.colors[c]) + r.rendered(c));
      }
      grid.push_back(std::move(cells));
    }
    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : grid) {
      for (std::size_t c = 0; c < row.size() && c < widths.size(); ++c) widths[c] = std::max(widths[c], width(row[c]));
    }
    for (const auto& row : grid) {
      std::string line;
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) line += " | ";
        line += c + 1 == row.size() ? row[c] : pad(row[c], widths[c]);
      }
      os << line << "\n";
    }
    os << "\n";
  }
  if (tables.empty()) os << "no runtime differences captured\n";
  return os.str();
}

void init_logging() {
  auto logger = spdlog::get("patchlens");
  if (!logger) logger = spdlog::stderr_color_mt("patchlens");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("PATCHLENS_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"patchlens: cluster, rank and compare plausible patches", "patchlens"};
  app.require_subcommand(1, 1);

  auto* analyze = app.add_subcommand("analyze", "runtime comparison tables for a bug's representatives");
  analyze->add_option("--bug", o.bug, "bug directory")->required();
  analyze->add_option("--patches", o.patches, "patches file overriding <bug>/patches.json");
  analyze->add_option("--out", o.out, "output file (default stdout)");
  analyze->add_option("--trace", o.trace_out, "also write the raw trace logs here");
  analyze->add_option("--max-reps", o.max_reps)->check(CLI::PositiveNumber);
  analyze->add_option("--format", o.format)->check(CLI::IsMember({"json", "text"}));

  auto* rank = app.add_subcommand("rank", "ranked cluster representatives");
  rank->add_option("--bug", o.bug, "bug directory")->required();
  rank->add_option("--patches", o.patches);
  rank->add_option("--out", o.out);
  rank->add_option("--max-reps", o.max_reps)->check(CLI::PositiveNumber);
  rank->add_option("--format", o.format)->check(CLI::IsMember({"json", "text"}));

  auto* gen = app.add_subcommand("gen", "generate plausible patches by mutation");
  gen->add_option("--bug", o.bug, "bug directory holding program.mini, tests.mini, meta.json")->required();
  gen->add_option("--out", o.out, "patches file (default stdout)");
  gen->add_option("--meta-out", o.meta_out, "write meta.json with the generated correct patch id");
  gen->add_option("--seed", o.seed);

  auto* eval = app.add_subcommand("eval", "rank of the correct patch under three strategies");
  eval->add_option("--corpus", o.corpus)->required();
  eval->add_option("--out", o.out);
  eval->add_option("--max-reps", o.max_reps)->check(CLI::PositiveNumber);
  eval->add_option("--format", o.format)->check(CLI::IsMember({"json", "text"}));

  auto* serve = app.add_subcommand("serve", "HTTP+JSON session API");
  serve->add_option("--corpus", o.corpus)->required();
  serve->add_option("--port", o.port)->check(CLI::Range(1, 65535));
  serve->add_option("--host", o.host);
  serve->add_option("--static", o.static_dir, "directory of web assets mounted at /");
  serve->add_option("--max-reps", o.max_reps)->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
    return 2;
  }

  try {
    if (*analyze) return cmd_analyze(o, out);
    if (*rank) return cmd_rank(o, out);
    if (*gen) return cmd_gen(o, out);
    if (*eval) return cmd_eval(o, out);
    return cmd_serve(o, out);
  } catch (const Error& e) {
    err << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace patchlens::cli
