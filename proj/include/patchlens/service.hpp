#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "patchlens/bench.hpp"
#include "patchlens/cluster.hpp"
#include "patchlens/pipeline.hpp"
#include "patchlens/tracealign.hpp"

namespace patchlens::service {

struct Action {
  std::string kind;  // "explore" | "exclude" | "select"
  std::string target;
  friend bool operator==(const Action&, const Action&) = default;
};

struct ClusterSummary {
  std::string cluster_id;  // "c1".. in ranked order
  std::string representative;
  std::string replacement;
  int original_rank = 0;
  std::size_t distance = 0;
  std::vector<std::string> members;
};

struct SessionView {
  std::string session_id;
  std::string bug_id;
  std::string program_file;
  std::string program_text;
  int buggy_line = 0;
  std::vector<ClusterSummary> clusters;  // one per representative, ranked
  std::vector<tracealign::ComparisonTable> tables;
  std::vector<std::string> excluded;  // ascending original_rank
  std::size_t active_count = 0;
  std::vector<Action> history;
  std::optional<std::string> selection;
};

struct Selection {
  std::string patch_id;
  std::string program_text;
  bool matches_correct = false;
};

struct Session;
struct BugState;

// In-memory sessions over a loaded corpus. Calls on one session are
// serialized; distinct sessions proceed independently except while tracing
// the same bug, whose traces are shared.
class SessionService {
 public:
  explicit SessionService(std::vector<bench::BugCase> corpus, std::size_t max_reps = 5);
  ~SessionService();

  nlohmann::json list_bugs() const;
  const bench::BugCase& bug(const std::string& bug_id) const;  // throws UnknownBug

  SessionView create_session(const std::string& bug_id);
  SessionView view(const std::string& session_id);
  SessionView explore_cluster(const std::string& session_id, const std::string& cluster_id);
  SessionView exclude_cluster(const std::string& session_id, const std::string& cluster_id);
  std::vector<tracealign::ComparisonTable> get_tables(const std::string& session_id,
                                                      const std::vector<std::string>& patch_ids);
  Selection select_patch(const std::string& session_id, const std::string& patch_id);

  // Replays `history` on a fresh session of the same bug.
  SessionView replay(const std::string& bug_id, const std::vector<Action>& history);

 private:
  std::shared_ptr<Session> find(const std::string& session_id);

  std::size_t max_reps_;
  std::map<std::string, std::shared_ptr<BugState>> bugs_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

nlohmann::json to_json(const SessionView& view);
nlohmann::json to_json(const Selection& selection);
nlohmann::json error_json(const std::string& code, const std::string& message);

}  // namespace patchlens::service
