#include "patchlens/service.hpp"

#include <algorithm>

#include "patchlens/errors.hpp"

namespace patchlens::service {

using nlohmann::json;

// Per-bug results shared by every session of that bug; both are pure
// functions of the bug.
struct BugState {
  std::mutex mutex;
  std::shared_ptr<const bench::BugCase> bug;
  std::optional<FilterResult> filtered;
  std::unique_ptr<pipeline::Analyzer> analyzer;
};

struct Session {
  std::mutex mutex;
  std::string id;
  std::shared_ptr<const bench::BugCase> bug;
  std::shared_ptr<BugState> shared;
  std::vector<std::string> active;    // ascending original_rank
  std::vector<std::string> excluded;  // ascending original_rank
  cluster::Dendrogram dendrogram;     // over the current view's patches
  cluster::SampleResult current;
  std::vector<tracealign::ComparisonTable> current_tables;
  std::map<std::string, std::vector<tracealign::ComparisonTable>> table_cache;
  std::vector<Action> history;
  std::optional<std::string> selection;
};

namespace {

std::vector<std::string> by_rank(const PatchSet& all, const std::set<std::string>& ids) {
  std::vector<std::string> out;
  for (const auto& p : all.patches) {
    if (ids.count(p.id)) out.push_back(p.id);
  }
  return out;
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::vector<tracealign::ComparisonTable> tables_locked(Session& s, const std::vector<std::string>& ids) {
  for (const auto& id : ids) {
    if (!contains(s.active, id)) throw UnknownPatch("patch '" + id + "' is not active in session " + s.id);
  }
  // Columns follow similarity to the buggy statement, as representatives do.
  auto ranked = cluster::rank_representatives(ids, s.bug->buggy_context(), s.bug->patches);
  std::vector<std::string> ordered;
  for (const auto& r : ranked) {
    if (!contains(ordered, r.patch_id)) ordered.push_back(r.patch_id);
  }
  std::vector<std::string> key_ids = ordered;
  std::sort(key_ids.begin(), key_ids.end());
  std::string key;
  for (const auto& id : key_ids) key += id + ",";
  auto it = s.table_cache.find(key);
  if (it != s.table_cache.end()) return it->second;
  std::vector<tracealign::ComparisonTable> tables;
  {
    std::lock_guard lock(s.shared->mutex);
    tables = s.shared->analyzer->tables(ordered);
  }
  s.table_cache.emplace(key, tables);
  return tables;
}

void show(Session& s, const std::vector<std::string>& scope, std::size_t max_reps) {
  PatchSet patches = cluster::subset(s.bug->patches, scope);
  s.dendrogram = cluster::build_dendrogram(patches);
  s.current = cluster::sample(patches, s.bug->buggy_context(), max_reps);
  std::vector<std::string> reps;
  for (const auto& r : s.current.ranked) reps.push_back(r.patch_id);
  s.current_tables = tables_locked(s, reps);
}

SessionView snapshot(const Session& s) {
  SessionView v;
  v.session_id = s.id;
  v.bug_id = s.bug->id;
  v.program_file = s.bug->program->file;
  v.program_text = s.bug->program->source_text;
  v.buggy_line = s.bug->buggy_line;
  for (std::size_t i = 0; i < s.current.ranked.size(); ++i) {
    ClusterSummary c;
    c.cluster_id = "c" + std::to_string(i + 1);
    c.representative = s.current.ranked[i].patch_id;
    const Patch& rep = s.bug->patches.at(c.representative);
    c.replacement = rep.replacement_text;
    c.original_rank = rep.original_rank;
    c.distance = s.current.ranked[i].distance;
    c.members = s.current.clusters[i].members;
    v.clusters.push_back(std::move(c));
  }
  v.tables = s.current_tables;
  v.excluded = s.excluded;
  v.active_count = s.active.size();
  v.history = s.history;
  v.selection = s.selection;
  return v;
}

const cluster::ClusterNode& cluster_by_id(const Session& s, const std::string& cluster_id) {
  for (std::size_t i = 0; i < s.current.clusters.size(); ++i) {
    if (cluster_id == "c" + std::to_string(i + 1)) return s.current.clusters[i];
  }
  throw UnknownCluster("unknown cluster '" + cluster_id + "' in session " + s.id);
}

}  // namespace

SessionService::SessionService(std::vector<bench::BugCase> corpus, std::size_t max_reps) : max_reps_(max_reps) {
  for (auto& b : corpus) {
    std::string id = b.id;
    auto state = std::make_shared<BugState>();
    state->bug = std::make_shared<const bench::BugCase>(std::move(b));
    bugs_.emplace(id, state);
  }
}

SessionService::~SessionService() = default;

json SessionService::list_bugs() const {
  json out = json::array();
  for (const auto& [id, state] : bugs_) {
    const auto& b = state->bug;
    out.push_back({
        {"bug_id", id},
        {"root_cause", b->root_cause},
        {"buggy_line", b->buggy_line},
        {"patch_count", b->patches.size()},
    });
  }
  return out;
}

const bench::BugCase& SessionService::bug(const std::string& bug_id) const {
  auto it = bugs_.find(bug_id);
  if (it == bugs_.end()) throw UnknownBug("unknown bug '" + bug_id + "'");
  return *it->second->bug;
}

std::shared_ptr<Session> SessionService::find(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw UnknownSession("unknown session '" + session_id + "'");
  return it->second;
}

SessionView SessionService::create_session(const std::string& bug_id) {
  auto it = bugs_.find(bug_id);
  if (it == bugs_.end()) throw UnknownBug("unknown bug '" + bug_id + "'");
  auto s = std::make_shared<Session>();
  s->shared = it->second;
  s->bug = s->shared->bug;
  {
    std::lock_guard lock(s->shared->mutex);
    if (!s->shared->filtered) s->shared->filtered = filter_plausible(*s->bug->program, s->bug->patches, s->bug->tests);
    if (!s->shared->analyzer) s->shared->analyzer = std::make_unique<pipeline::Analyzer>(s->bug);
  }
  const FilterResult& filtered = *s->shared->filtered;
  if (filtered.plausible.empty()) throw PipelineError("filter", "bug " + bug_id + " has no plausible patch");
  for (const auto& p : s->bug->patches.patches) {
    (filtered.plausible.find(p.id) ? s->active : s->excluded).push_back(p.id);
  }
  show(*s, s->active, max_reps_);
  {
    std::lock_guard lock(mutex_);
    s->id = "s" + std::to_string(next_id_++);
    sessions_.emplace(s->id, s);
  }
  std::lock_guard lock(s->mutex);
  return snapshot(*s);
}

SessionView SessionService::view(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return snapshot(*s);
}

SessionView SessionService::explore_cluster(const std::string& session_id, const std::string& cluster_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  std::vector<std::string> members = cluster_by_id(*s, cluster_id).members;
  show(*s, members, max_reps_);
  s->history.push_back(Action{"explore", cluster_id});
  return snapshot(*s);
}

SessionView SessionService::exclude_cluster(const std::string& session_id, const std::string& cluster_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  const auto& members = cluster_by_id(*s, cluster_id).members;
  std::set<std::string> remaining(s->active.begin(), s->active.end());
  for (const auto& m : members) remaining.erase(m);
  if (remaining.empty())
    throw EmptyActiveSet("excluding " + cluster_id + " would leave session " + s->id + " without patches");

  std::set<std::string> excluded(s->excluded.begin(), s->excluded.end());
  excluded.insert(members.begin(), members.end());
  s->active = by_rank(s->bug->patches, remaining);
  s->excluded = by_rank(s->bug->patches, excluded);
  if (s->selection && !remaining.count(*s->selection)) s->selection.reset();
  show(*s, s->active, max_reps_);
  s->history.push_back(Action{"exclude", cluster_id});
  return snapshot(*s);
}

std::vector<tracealign::ComparisonTable> SessionService::get_tables(const std::string& session_id,
                                                                    const std::vector<std::string>& patch_ids) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  for (const auto& id : patch_ids) {
    if (!s->bug->patches.find(id)) throw UnknownPatch("unknown patch '" + id + "'");
  }
  return tables_locked(*s, patch_ids);
}

Selection SessionService::select_patch(const std::string& session_id, const std::string& patch_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (!contains(s->active, patch_id)) throw UnknownPatch("patch '" + patch_id + "' is not active in session " + s->id);
  const Patch& p = s->bug->patches.at(patch_id);
  Selection out;
  out.patch_id = patch_id;
  out.program_text = apply_patch(*s->bug->program, p).source_text;
  out.matches_correct = patch_id == s->bug->correct_patch_id;
  s->selection = patch_id;
  s->history.push_back(Action{"select", patch_id});
  return out;
}

SessionView SessionService::replay(const std::string& bug_id, const std::vector<Action>& history) {
  SessionView v = create_session(bug_id);
  std::string id = v.session_id;
  for (const auto& a : history) {
    if (a.kind == "explore") {
      explore_cluster(id, a.target);
    } else if (a.kind == "exclude") {
      exclude_cluster(id, a.target);
    } else if (a.kind == "select") {
      select_patch(id, a.target);
    } else {
      throw FormatError("unknown action '" + a.kind + "'");
    }
  }
  return view(id);
}

json to_json(const SessionView& view) {
  json clusters = json::array();
  for (const auto& c : view.clusters) {
    clusters.push_back({
        {"cluster_id", c.cluster_id},
        {"representative", c.representative},
        {"replacement", c.replacement},
        {"original_rank", c.original_rank},
        {"distance", c.distance},
        {"size", c.members.size()},
        {"members", c.members},
    });
  }
  json history = json::array();
  for (const auto& a : view.history) history.push_back({{"action", a.kind}, {"target", a.target}});
  return {
      {"session_id", view.session_id},
      {"bug_id", view.bug_id},
      {"program", {{"file", view.program_file}, {"text", view.program_text}, {"buggy_line", view.buggy_line}}},
      {"clusters", clusters},
      {"tables", tracealign::to_json(view.tables)},
      {"excluded", view.excluded},
      {"active_count", view.active_count},
      {"history", history},
      {"selection", view.selection ? json(*view.selection) : json(nullptr)},
  };
}

json to_json(const Selection& selection) {
  return {
      {"patch_id", selection.patch_id},
      {"program_text", selection.program_text},
      {"matches_correct", selection.matches_correct},
  };
}

json error_json(const std::string& code, const std::string& message) {
  return {{"code", code}, {"message", message}};
}

}  // namespace patchlens::service
