#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "patchlens/cluster.hpp"
#include "patchlens/minilang/parser.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace patchlens;
using namespace patchlens::cluster;

namespace {

const minilang::SourceProgram& program() {
  static const auto p = minilang::parse("fn f(a: int, b: int, c: int, d: int) -> int {\n    let r: int = a + b;\n    return r;\n}\n");
  return p;
}

BuggyContext buggy() { return BuggyContext::of(program(), 2); }

PatchSet make(const std::vector<std::string>& texts) {
  PatchSet ps;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Patch p;
    p.id = "p" + std::to_string(i + 1);
    p.target_line = 2;
    p.replacement_text = texts[i];
    p.original_rank = static_cast<int>(i) + 1;
    ps.patches.push_back(p);
  }
  return ps;
}

std::vector<std::string> leaves(const ClusterNode& n) {
  if (n.is_leaf()) return n.members;
  std::vector<std::string> out;
  for (const auto& c : n.children) {
    auto sub = leaves(c);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

std::string medoid_brute(const std::vector<std::string>& members, const PatchSet& ps) {
  std::string best;
  std::size_t best_sum = SIZE_MAX;
  int best_rank = 0;
  for (const auto& m : members) {
    std::size_t sum = 0;
    for (const auto& o : members)
      sum += oracle::levenshtein(tokenize(ps.at(m).replacement_text), tokenize(ps.at(o).replacement_text));
    int rank = ps.at(m).original_rank;
    if (sum < best_sum || (sum == best_sum && rank < best_rank)) {
      best = m;
      best_sum = sum;
      best_rank = rank;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("dendrogram over three patches merges the closest pair first") {
  auto ps = make({"let r: int = a + b;", "let r: int = a - b;", "let r: float = c * c * d;"});
  auto d = build_dendrogram(ps);
  CHECK(d.leaf_count == 3);
  REQUIRE(d.merge_heights.size() == 2);
  CHECK(d.merge_heights[0] == doctest::Approx(1.0));
  REQUIRE(d.root.children.size() == 2);
  CHECK(d.root.children[0].members == std::vector<std::string>{"p1", "p2"});
  CHECK(d.root.children[1].members == std::vector<std::string>{"p3"});
  CHECK(d.root.members == std::vector<std::string>{"p1", "p2", "p3"});
}

TEST_CASE("average linkage heights are non-decreasing with n-1 merges") {
  gen::Rng rng(77);
  for (int round = 0; round < 50; ++round) {
    auto ps = gen::patch_set(rng, gen::uniform(rng, 1, 14));
    auto d = build_dendrogram(ps);
    CHECK(d.merge_heights.size() == ps.size() - 1);
    CHECK(std::is_sorted(d.merge_heights.begin(), d.merge_heights.end()));
    auto l = leaves(d.root);
    std::sort(l.begin(), l.end());
    std::vector<std::string> ids;
    for (const auto& p : ps.patches) ids.push_back(p.id);
    std::sort(ids.begin(), ids.end());
    CHECK(l == ids);
  }
}

TEST_CASE("empty patch set is rejected") { CHECK_THROWS_AS(build_dendrogram(PatchSet{}), std::invalid_argument); }

TEST_CASE("cut picks the largest gap and partitions the leaves") {
  auto ps = make({"let r: int = a + b;", "let r: int = a - b;", "let r: int = a * b;",
                  "let r: float = c + d + c * d;", "let r: float = c + d + c / d;"});
  auto cut = cut_to_clusters(build_dendrogram(ps));
  REQUIRE(cut.size() == 2);
  CHECK(cut[0].members == std::vector<std::string>{"p1", "p2", "p3"});
  CHECK(cut[1].members == std::vector<std::string>{"p4", "p5"});

  gen::Rng rng(3);
  for (int round = 0; round < 60; ++round) {
    auto rand = gen::patch_set(rng, gen::uniform(rng, 1, 20));
    auto parts = cut_to_clusters(build_dendrogram(rand));
    CHECK(parts.size() >= 1);
    CHECK(parts.size() <= 5);
    if (rand.size() >= 2) CHECK(parts.size() >= 2);
    std::vector<std::string> all;
    for (const auto& c : parts) all.insert(all.end(), c.members.begin(), c.members.end());
    std::sort(all.begin(), all.end());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    CHECK(all.size() == rand.size());
  }
}

TEST_CASE("single patch is a single cluster") {
  auto ps = make({"let r: int = a;"});
  auto parts = cut_to_clusters(build_dendrogram(ps));
  REQUIRE(parts.size() == 1);
  CHECK(select_representative(parts[0], ps) == "p1");
}

TEST_CASE("representative is the brute-force medoid") {
  gen::Rng rng(19);
  for (int round = 0; round < 60; ++round) {
    auto ps = gen::patch_set(rng, gen::uniform(rng, 1, 8));
    ClusterNode all;
    for (const auto& p : ps.patches) all.members.push_back(p.id);
    CHECK(select_representative(all, ps) == medoid_brute(all.members, ps));
  }
}

TEST_CASE("medoid ties go to the better original rank") {
  auto ps = make({"let r: int = a + b;", "let r: int = a - b;"});
  ClusterNode c;
  c.members = {"p1", "p2"};
  CHECK(select_representative(c, ps) == "p1");
}

TEST_CASE("representatives rank by distance to the buggy statement") {
  auto ps = make({"let r: float = c * d;", "let r: int = a - b;", "let r: int = b + a;"});
  auto ranked = rank_representatives({"p1", "p2", "p3"}, buggy(), ps);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].patch_id == "p2");
  CHECK(ranked[0].distance == 1);
  CHECK(ranked[1].patch_id == "p3");
  CHECK(ranked[2].patch_id == "p1");
}

TEST_CASE("sample is invariant under input permutation") {
  gen::Rng rng(101);
  for (int round = 0; round < 40; ++round) {
    auto ps = gen::patch_set(rng, gen::uniform(rng, 1, 15));
    auto a = sample(ps, buggy());
    PatchSet shuffled = ps;
    std::shuffle(shuffled.patches.begin(), shuffled.patches.end(), rng);
    auto b = sample(shuffled, buggy());
    CHECK(a.ranked == b.ranked);
    REQUIRE(a.clusters.size() == b.clusters.size());
    for (std::size_t i = 0; i < a.clusters.size(); ++i) CHECK(a.clusters[i].members == b.clusters[i].members);
    CHECK(a.ranked.size() <= 5);
    CHECK(a.ranked.size() == a.clusters.size());
  }
}

TEST_CASE("hierarchical rank matches a flat enumeration of the two-level view") {
  gen::Rng rng(55);
  for (int round = 0; round < 80; ++round) {
    auto ps = gen::patch_set(rng, gen::uniform(rng, 1, 16));
    auto s = sample(ps, buggy());
    // What a user sees: the representatives in order, then the explored
    // cluster's members by similarity.
    for (const auto& target : ps.patches) {
      int expected = 0;
      for (std::size_t i = 0; i < s.ranked.size(); ++i) {
        if (s.ranked[i].patch_id == target.id) expected = static_cast<int>(i) + 1;
      }
      if (expected == 0) {
        for (std::size_t i = 0; i < s.clusters.size(); ++i) {
          const auto& m = s.clusters[i].members;
          if (std::find(m.begin(), m.end(), target.id) == m.end()) continue;
          auto order = rank_representatives(m, buggy(), ps);
          for (std::size_t j = 0; j < order.size(); ++j) {
            if (order[j].patch_id == target.id) expected = static_cast<int>(s.ranked.size() + j + 1);
          }
        }
      }
      CHECK(hierarchical_rank(cluster_path(ps, buggy(), target.id)) == expected);
    }
  }
}

TEST_CASE("subset keeps order and rejects unknown ids") {
  auto ps = make({"let r: int = a;", "let r: int = b;", "let r: int = c;"});
  auto sub = subset(ps, {"p3", "p1"});
  REQUIRE(sub.size() == 2);
  CHECK(sub.patches[0].id == "p1");
  CHECK(sub.patches[1].id == "p3");
  CHECK_THROWS(subset(ps, {"nope"}));
}

TEST_CASE("partition sizes follow merge order") {
  auto ps = make({"let r: int = a;", "let r: int = b;", "let r: int = c + d * a;", "let r: int = c + d * b;"});
  auto d = build_dendrogram(ps);
  for (std::size_t k = 1; k <= 4; ++k) {
    auto parts = d.partition(k);
    CHECK(parts.size() == k);
  }
  auto two = d.partition(2);
  CHECK(two[0].members == std::vector<std::string>{"p1", "p2"});
  CHECK(two[1].members == std::vector<std::string>{"p3", "p4"});
}
