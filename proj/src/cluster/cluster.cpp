#include "patchlens/cluster.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "patchlens/errors.hpp"

namespace patchlens::cluster {

namespace {

std::map<std::string, const Patch*> by_id(const PatchSet& patches) {
  std::map<std::string, const Patch*> out;
  for (const auto& p : patches.patches) out.emplace(p.id, &p);
  return out;
}

const Patch& lookup(const std::map<std::string, const Patch*>& index, const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) throw UnknownPatch("unknown patch '" + id + "'");
  return *it->second;
}

bool rank_less(const Patch& a, const Patch& b) {
  return std::tie(a.original_rank, a.id) < std::tie(b.original_rank, b.id);
}

}  // namespace

std::vector<std::vector<std::size_t>> distance_matrix(const PatchSet& patches) {
  std::vector<TokenSeq> tokens;
  tokens.reserve(patches.size());
  for (const auto& p : patches.patches) tokens.push_back(tokenize(p.replacement_text));
  std::size_t n = tokens.size();
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = levenshtein(tokens[i], tokens[j]);
  }
  return d;
}

ClusterNode Dendrogram::materialize(int index) const {
  const PoolNode& node = pool_[static_cast<std::size_t>(index)];
  ClusterNode out;
  out.members = node.members;
  out.merge_height = node.height;
  if (node.left >= 0) {
    out.children.push_back(materialize(node.left));
    out.children.push_back(materialize(node.right));
  }
  return out;
}

std::vector<ClusterNode> Dendrogram::partition(std::size_t k) const {
  if (k < 1 || k > leaf_count) throw std::invalid_argument("partition size out of range");
  // Roots after the first n - k merges: nodes not consumed by those merges.
  std::size_t live_end = leaf_count + (leaf_count - k);
  std::vector<bool> consumed(live_end, false);
  for (std::size_t i = leaf_count; i < live_end; ++i) {
    consumed[static_cast<std::size_t>(pool_[i].left)] = true;
    consumed[static_cast<std::size_t>(pool_[i].right)] = true;
  }
  std::vector<int> roots;
  for (std::size_t i = 0; i < live_end; ++i) {
    if (!consumed[i]) roots.push_back(static_cast<int>(i));
  }
  // Leaves are in rank order, so the smallest leaf index orders the clusters.
  std::map<std::string, std::size_t> leaf_pos;
  for (std::size_t i = 0; i < leaf_count; ++i) leaf_pos[pool_[i].members.front()] = i;
  std::sort(roots.begin(), roots.end(), [&](int a, int b) {
    return leaf_pos[pool_[static_cast<std::size_t>(a)].members.front()] <
           leaf_pos[pool_[static_cast<std::size_t>(b)].members.front()];
  });
  std::vector<ClusterNode> out;
  for (int r : roots) out.push_back(materialize(r));
  return out;
}

Dendrogram build_dendrogram(const PatchSet& patches) {
  if (patches.empty()) throw std::invalid_argument("cannot cluster an empty patch set");
  std::vector<const Patch*> leaves;
  for (const auto& p : patches.patches) leaves.push_back(&p);
  std::sort(leaves.begin(), leaves.end(), [](const Patch* a, const Patch* b) { return rank_less(*a, *b); });
  std::size_t n = leaves.size();

  PatchSet ordered;
  for (const Patch* p : leaves) ordered.patches.push_back(*p);
  auto dist = distance_matrix(ordered);

  Dendrogram d;
  d.leaf_count = n;
  for (const Patch* p : leaves) d.pool_.push_back(Dendrogram::PoolNode{-1, -1, 0.0, {p->id}});

  struct Active {
    int pool;
    std::vector<std::size_t> leaves;  // ascending
    std::uint64_t size() const { return leaves.size(); }
  };
  std::vector<Active> active;
  for (std::size_t i = 0; i < n; ++i) active.push_back(Active{static_cast<int>(i), {i}});
  // sums[a][b]: total leaf-to-leaf distance between active clusters a and b.
  std::vector<std::vector<std::uint64_t>> sums(n, std::vector<std::uint64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sums[i][j] = dist[i][j];

  while (active.size() > 1) {
    std::size_t best_a = 0, best_b = 1;
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        if (a == best_a && b == best_b) continue;
        // sums[a][b] / (|a||b|) against the current best, compared exactly.
        std::uint64_t lhs = sums[a][b] * (active[best_a].size() * active[best_b].size());
        std::uint64_t rhs = sums[best_a][best_b] * (active[a].size() * active[b].size());
        if (lhs < rhs) {
          best_a = a;
          best_b = b;
        } else if (lhs == rhs) {
          auto key = [&](std::size_t x, std::size_t y) {
            std::size_t p = active[x].leaves.front(), q = active[y].leaves.front();
            return std::make_pair(std::min(p, q), std::max(p, q));
          };
          if (key(a, b) < key(best_a, best_b)) {
            best_a = a;
            best_b = b;
          }
        }
      }
    }
    Active& A = active[best_a];
    Active& B = active[best_b];
    double height = static_cast<double>(sums[best_a][best_b]) / static_cast<double>(A.size() * B.size());
    bool a_first = A.leaves.front() < B.leaves.front();
    const Active& first = a_first ? A : B;
    const Active& second = a_first ? B : A;

    Dendrogram::PoolNode node;
    node.left = first.pool;
    node.right = second.pool;
    node.height = height;
    std::vector<std::size_t> merged;
    std::merge(first.leaves.begin(), first.leaves.end(), second.leaves.begin(), second.leaves.end(),
               std::back_inserter(merged));
    for (std::size_t leaf : merged) node.members.push_back(leaves[leaf]->id);
    d.pool_.push_back(std::move(node));
    d.merge_heights.push_back(height);

    for (std::size_t x = 0; x < active.size(); ++x) {
      sums[best_a][x] += sums[best_b][x];
      sums[x][best_a] = sums[best_a][x];
    }
    A.pool = static_cast<int>(d.pool_.size() - 1);
    A.leaves = std::move(merged);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
    sums.erase(sums.begin() + static_cast<std::ptrdiff_t>(best_b));
    for (auto& row : sums) row.erase(row.begin() + static_cast<std::ptrdiff_t>(best_b));
  }
  d.root = d.materialize(active.front().pool);
  return d;
}

std::vector<ClusterNode> cut_to_clusters(const Dendrogram& d, std::size_t max_k) {
  if (max_k < 1) throw std::invalid_argument("max_k must be at least 1");
  std::size_t n = d.leaf_count;
  std::size_t upper = std::min(max_k, n);
  if (upper == 1) return d.partition(1);
  // h[i] is the height of the i-th merge (1-based); h[0] is the leaf level.
  std::vector<double> h(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i + 1] = d.merge_heights[i];
  std::size_t best_k = 2;
  double best_gap = -1.0;
  for (std::size_t k = 2; k <= upper; ++k) {
    double gap = h[n - k + 1] - h[n - k];
    if (gap >= best_gap) {
      best_gap = gap;
      best_k = k;
    }
  }
  return d.partition(best_k);
}

std::string select_representative(const ClusterNode& c, const PatchSet& patches) {
  if (c.members.empty()) throw std::invalid_argument("empty cluster");
  PatchSet members = subset(patches, c.members);
  auto dist = distance_matrix(members);
  std::size_t best = 0;
  std::size_t best_sum = 0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    std::size_t s = std::accumulate(dist[i].begin(), dist[i].end(), std::size_t{0});
    if (i == 0 || s < best_sum || (s == best_sum && rank_less(members.patches[i], members.patches[best]))) {
      best = i;
      best_sum = s;
    }
  }
  return members.patches[best].id;
}

RankedPatches rank_representatives(const std::vector<std::string>& reps, const BuggyContext& buggy,
                                   const PatchSet& patches) {
  auto index = by_id(patches);
  TokenSeq buggy_tokens = tokenize(buggy.buggy_statement_text);
  std::vector<std::pair<RankedEntry, const Patch*>> rows;
  for (const auto& id : reps) {
    const Patch& p = lookup(index, id);
    rows.push_back({RankedEntry{id, levenshtein(tokenize(p.replacement_text), buggy_tokens)}, &p});
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.first.distance != b.first.distance) return a.first.distance < b.first.distance;
    return rank_less(*a.second, *b.second);
  });
  RankedPatches out;
  for (auto& r : rows) out.push_back(std::move(r.first));
  return out;
}

SampleResult sample(const PatchSet& patches, const BuggyContext& buggy, std::size_t max_k) {
  Dendrogram d = build_dendrogram(patches);
  std::vector<ClusterNode> clusters = cut_to_clusters(d, max_k);
  std::vector<std::string> reps;
  for (auto& c : clusters) {
    c.representative = select_representative(c, patches);
    reps.push_back(*c.representative);
  }
  SampleResult out;
  out.ranked = rank_representatives(reps, buggy, patches);
  for (const auto& entry : out.ranked) {
    auto it = std::find_if(clusters.begin(), clusters.end(),
                           [&](const ClusterNode& c) { return c.representative == entry.patch_id; });
    out.clusters.push_back(std::move(*it));
  }
  return out;
}

RankedPatches within_cluster_order(const ClusterNode& c, const BuggyContext& buggy, const PatchSet& patches) {
  return rank_representatives(c.members, buggy, patches);
}

ClusterPath cluster_path(const PatchSet& patches, const BuggyContext& buggy, const std::string& target_id,
                         std::size_t max_k) {
  if (!patches.find(target_id)) throw UnknownPatch("unknown patch '" + target_id + "'");
  SampleResult s = sample(patches, buggy, max_k);
  ClusterPath path;
  for (std::size_t i = 0; i < s.ranked.size(); ++i) {
    if (s.ranked[i].patch_id == target_id) {
      path.within_position = static_cast<int>(i) + 1;
      return path;
    }
  }
  for (const auto& c : s.clusters) {
    if (std::find(c.members.begin(), c.members.end(), target_id) == c.members.end()) continue;
    RankedPatches order = within_cluster_order(c, buggy, patches);
    path.level_widths.push_back(static_cast<int>(s.ranked.size()));
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i].patch_id == target_id) path.within_position = static_cast<int>(i) + 1;
    }
    return path;
  }
  throw UnknownPatch("patch '" + target_id + "' missing from every cluster");
}

int hierarchical_rank(const ClusterPath& path) {
  return std::accumulate(path.level_widths.begin(), path.level_widths.end(), 0) + path.within_position;
}

PatchSet subset(const PatchSet& patches, const std::vector<std::string>& ids) {
  PatchSet out;
  for (const auto& p : patches.patches) {
    if (std::find(ids.begin(), ids.end(), p.id) != ids.end()) out.patches.push_back(p);
  }
  if (out.size() != ids.size()) {
    for (const auto& id : ids) {
      if (!patches.find(id)) throw UnknownPatch("unknown patch '" + id + "'");
    }
  }
  return out;
}

}  // namespace patchlens::cluster
