#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "patchlens/patchmodel.hpp"

namespace patchlens::cluster {

struct ClusterNode {
  std::vector<std::string> members;  // patch ids, ascending original_rank
  std::vector<ClusterNode> children;  // empty (leaf) or exactly two
  double merge_height = 0.0;
  std::optional<std::string> representative;

  bool is_leaf() const { return children.empty(); }
};

struct Dendrogram {
  ClusterNode root;
  std::size_t leaf_count = 0;
  // Heights in merge order; non-decreasing under average linkage.
  std::vector<double> merge_heights;

  // The k clusters left after undoing the last k - 1 merges, ordered by their
  // best original_rank. Requires 1 <= k <= leaf_count.
  std::vector<ClusterNode> partition(std::size_t k) const;

 private:
  friend Dendrogram build_dendrogram(const PatchSet& patches);
  struct PoolNode {
    int left = -1;
    int right = -1;
    double height = 0.0;
    std::vector<std::string> members;
  };
  // Leaves first (ascending original_rank), then one node per merge.
  std::vector<PoolNode> pool_;
  ClusterNode materialize(int index) const;
};

struct RankedEntry {
  std::string patch_id;
  std::size_t distance = 0;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};
using RankedPatches = std::vector<RankedEntry>;

struct ClusterPath {
  std::vector<int> level_widths;
  int within_position = 1;
};

// Pairwise token distances, indexed like `patches.patches`.
std::vector<std::vector<std::size_t>> distance_matrix(const PatchSet& patches);

// Average-linkage agglomeration. Throws std::invalid_argument on an empty set.
Dendrogram build_dendrogram(const PatchSet& patches);

// Largest merge-height gap among k in [2, min(max_k, n)]; ties go to the
// larger k. Returns the clusters ordered by their best original_rank.
std::vector<ClusterNode> cut_to_clusters(const Dendrogram& d, std::size_t max_k = 5);

std::string select_representative(const ClusterNode& c, const PatchSet& patches);

RankedPatches rank_representatives(const std::vector<std::string>& reps, const BuggyContext& buggy,
                                   const PatchSet& patches);

struct SampleResult {
  RankedPatches ranked;
  // clusters[i] is the cluster represented by ranked[i].
  std::vector<ClusterNode> clusters;
};

SampleResult sample(const PatchSet& patches, const BuggyContext& buggy, std::size_t max_k = 5);

// Members of `c` ascending by distance to the buggy statement, then original_rank.
RankedPatches within_cluster_order(const ClusterNode& c, const BuggyContext& buggy, const PatchSet& patches);

// Position of `target_id` when a user scans the representatives and then the
// target's own cluster. Throws UnknownPatch if the id is not in `patches`.
ClusterPath cluster_path(const PatchSet& patches, const BuggyContext& buggy, const std::string& target_id,
                         std::size_t max_k = 5);

int hierarchical_rank(const ClusterPath& path);

// Subset of `patches` with the given ids, in the set's original order.
PatchSet subset(const PatchSet& patches, const std::vector<std::string>& ids);

}  // namespace patchlens::cluster
