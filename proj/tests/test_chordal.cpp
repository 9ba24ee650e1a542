#include <doctest.h>

#include <random>

#include "opfsdr/cliquetree.hpp"
#include "opfsdr/pattern.hpp"
#include "support/fixtures.hpp"

using namespace opfsdr;
using opfsdr::testing::all_maximal_cliques;
using opfsdr::testing::random_connected_graph;

namespace {

// The order-4 example pattern: edges 1-2, 2-3, 3-4, 1-3, 2-4 (1-based).
SparsityPattern example_pattern() {
  SparsityPattern p(4);
  p.add_edge(0, 1);
  p.add_edge(1, 2);
  p.add_edge(2, 3);
  p.add_edge(0, 2);
  p.add_edge(1, 3);
  return p;
}

SparsityPattern path_graph(int n) {
  SparsityPattern p(n);
  for (int i = 0; i + 1 < n; ++i) p.add_edge(i, i + 1);
  return p;
}

SparsityPattern cycle_graph(int n) {
  SparsityPattern p = path_graph(n);
  p.add_edge(0, n - 1);
  return p;
}

SparsityPattern complete_graph(int n) {
  SparsityPattern p(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) p.add_edge(i, j);
  }
  return p;
}

}  // namespace

TEST_CASE("verify_chordal: trees, C4, C4 + chord") {
  CHECK(verify_chordal(path_graph(6)));
  CHECK_FALSE(verify_chordal(cycle_graph(4)));
  SparsityPattern chorded = cycle_graph(4);
  chorded.add_edge(0, 2);
  CHECK(verify_chordal(chorded));
  CHECK(verify_chordal(example_pattern()));
  CHECK(verify_chordal(complete_graph(5)));
  CHECK_FALSE(verify_chordal(cycle_graph(7)));
}

TEST_CASE("chordal_embedding: trees need no fill") {
  const Embedding emb = chordal_embedding(path_graph(8));
  CHECK(emb.filled.num_edges() == 7);
  CHECK(verify_chordal(emb.filled));
}

TEST_CASE("chordal_embedding: 4-cycle gets exactly one fill edge") {
  const Embedding emb = chordal_embedding(cycle_graph(4));
  CHECK(emb.filled.num_edges() == 5);
  CHECK(verify_chordal(emb.filled));
}

TEST_CASE("chordal_embedding: example pattern is already chordal") {
  const Embedding emb = chordal_embedding(example_pattern());
  CHECK(emb.filled.num_edges() == example_pattern().num_edges());
}

TEST_CASE("chordal_embedding: user permutation is honored") {
  // Eliminating the 4-cycle in order 0,1,2,3 fills (1,3).
  const std::vector<int> perm{0, 1, 2, 3};
  const Embedding emb = chordal_embedding(cycle_graph(4), &perm);
  CHECK(emb.elimination == perm);
  CHECK(emb.filled.has_edge(1, 3));
  CHECK_FALSE(emb.filled.has_edge(0, 2));
  CHECK(is_perfect_elimination(emb.filled, emb.elimination));
}

TEST_CASE("embedding soundness on random graphs") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 37);
    const SparsityPattern g = random_connected_graph(rng, n, n / 2);
    const Embedding emb = chordal_embedding(g);
    CHECK(verify_chordal(emb.filled));
    CHECK(is_perfect_elimination(emb.filled, emb.elimination));
    for (int i = 0; i < n; ++i) {
      for (int j : g.neighbors(i)) {
        CHECK(emb.filled.has_edge(i, j));
      }
    }
  }
}

TEST_CASE("find_cliques matches brute force on random chordal graphs") {
  std::mt19937 rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 9);
    const Embedding emb = chordal_embedding(random_connected_graph(rng, n, n / 3));
    const auto cliques = find_cliques(emb.filled, emb.elimination);
    CHECK(cliques == all_maximal_cliques(emb.filled));
    CHECK(static_cast<int>(cliques.size()) <= n - 1);
  }
}

TEST_CASE("find_cliques: example pattern") {
  const Embedding emb = chordal_embedding(example_pattern());
  const auto cliques = find_cliques(emb.filled, emb.elimination);
  REQUIRE(cliques.size() == 2);
  CHECK(cliques[0] == std::vector<int>{0, 1, 2});
  CHECK(cliques[1] == std::vector<int>{1, 2, 3});
}

TEST_CASE("find_cliques: path and complete graphs") {
  const Embedding path_emb = chordal_embedding(path_graph(9));
  CHECK(find_cliques(path_emb.filled, path_emb.elimination).size() == 8);
  const Embedding k4 = chordal_embedding(complete_graph(4));
  const auto cliques = find_cliques(k4.filled, k4.elimination);
  REQUIRE(cliques.size() == 1);
  CHECK(cliques[0] == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("find_cliques rejects a non-PEO ordering") {
  SparsityPattern p = cycle_graph(4);
  const std::vector<int> bad{1, 3, 0, 2};
  CHECK_THROWS_AS(find_cliques(p, bad), NotChordal);
}

TEST_CASE("build_clique_tree: example pattern separator") {
  const Embedding emb = chordal_embedding(example_pattern());
  const CliqueTree tree = build_clique_tree(find_cliques(emb.filled, emb.elimination));
  REQUIRE(tree.size() == 2);
  const int child = tree.root == 0 ? 1 : 0;
  CHECK(tree.separators[child] == std::vector<int>{1, 2});
  CHECK(verify_running_intersection(tree));
}

TEST_CASE("build_clique_tree: star separators are the hub") {
  SparsityPattern p(4);
  p.add_edge(0, 1);
  p.add_edge(0, 2);
  p.add_edge(0, 3);
  const Embedding emb = chordal_embedding(p);
  const CliqueTree tree = build_clique_tree(find_cliques(emb.filled, emb.elimination));
  REQUIRE(tree.size() == 3);
  for (int j = 0; j < 3; ++j) {
    if (j == tree.root) continue;
    CHECK(tree.separators[j] == std::vector<int>{0});
  }
}

TEST_CASE("build_clique_tree: single clique") {
  const CliqueTree tree = build_clique_tree({{0, 1, 2}});
  CHECK(tree.size() == 1);
  CHECK(tree.parent[0] == -1);
  CHECK(tree.separators[0].empty());
  CHECK(verify_running_intersection(tree));
}

TEST_CASE("running intersection property on random chordal graphs") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 30);
    const Embedding emb = chordal_embedding(random_connected_graph(rng, n, n / 2));
    const CliqueTree tree = build_clique_tree(find_cliques(emb.filled, emb.elimination));
    CHECK(verify_running_intersection(tree));
    for (int i = 0; i < n; ++i) {
      for (int j : emb.filled.neighbors(i)) {
        if (j <= i) continue;
        bool covered = false;
        for (const auto& c : tree.cliques) {
          if (std::binary_search(c.begin(), c.end(), i) &&
              std::binary_search(c.begin(), c.end(), j)) {
            covered = true;
            break;
          }
        }
        CHECK(covered);
      }
    }
  }
}

TEST_CASE("verify_running_intersection detects a violation") {
  CliqueTree bad;
  bad.cliques = {{0, 1}, {1, 2}, {0, 2}};
  bad.parent = {-1, 0, 1};
  bad.children = {{1}, {2}, {}};
  bad.separators = {{}, {1}, {2}};
  bad.root = 0;
  bad.postorder = {2, 1, 0};
  // vertex 0 appears in cliques 0 and 2, which are not adjacent in the tree
  CHECK_FALSE(verify_running_intersection(bad));
}

TEST_CASE("amalgamate: small fill merges") {
  // Two order-2 cliques sharing one vertex: fill = (2-1)(2-1) = 1 <= 16.
  const CliqueTree tree = build_clique_tree({{0, 1}, {1, 2}});
  const CliqueTree merged = amalgamate(tree, 16, 16);
  REQUIRE(merged.size() == 1);
  CHECK(merged.cliques[0] == std::vector<int>{0, 1, 2});
}

TEST_CASE("amalgamate: zero thresholds merge nothing") {
  const CliqueTree tree = build_clique_tree({{0, 1, 2}, {2, 3, 4}, {4, 5, 6}});
  const CliqueTree merged = amalgamate(tree, 0, 0);
  CHECK(merged.size() == 3);
}

TEST_CASE("amalgamate: chain of order-2 cliques with default thresholds") {
  const Embedding emb = chordal_embedding(path_graph(40));
  const CliqueTree tree = build_clique_tree(find_cliques(emb.filled, emb.elimination));
  const CliqueTree merged = amalgamate(tree, 16, 16);
  CHECK(merged.size() < tree.size());
  CHECK(verify_running_intersection(merged));
  // Golden outcome of the documented single bottom-up pass, recorded once.
  CHECK(merged.size() == 3);
  std::size_t max_order = 0;
  for (const auto& c : merged.cliques) max_order = std::max(max_order, c.size());
  CHECK(max_order == 18);
}

TEST_CASE("amalgamate never increases clique count or breaks RIP") {
  std::mt19937 rng(37);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 30);
    const Embedding emb = chordal_embedding(random_connected_graph(rng, n, n / 2));
    const CliqueTree tree = build_clique_tree(find_cliques(emb.filled, emb.elimination));
    for (int t : {0, 4, 16}) {
      const CliqueTree merged = amalgamate(tree, t, t);
      CHECK(merged.size() <= tree.size());
      CHECK(verify_running_intersection(merged));
    }
  }
}

TEST_CASE("determinism: identical inputs give identical trees") {
  std::mt19937 rng(41);
  const SparsityPattern g = random_connected_graph(rng, 25, 12);
  const Embedding e1 = chordal_embedding(g);
  const Embedding e2 = chordal_embedding(g);
  CHECK(e1.elimination == e2.elimination);
  const CliqueTree t1 = build_clique_tree(find_cliques(e1.filled, e1.elimination));
  const CliqueTree t2 = build_clique_tree(find_cliques(e2.filled, e2.elimination));
  CHECK(t1.cliques == t2.cliques);
  CHECK(t1.parent == t2.parent);
  CHECK(t1.postorder == t2.postorder);
}

TEST_CASE("pattern_union aggregates supports") {
  std::vector<Triplet> a{{0, 1, {1, 0}}, {1, 0, {1, 0}}, {0, 0, {1, 0}}};
  std::vector<Triplet> b{{2, 3, {0, 1}}, {3, 2, {0, -1}}, {1, 1, {5, 0}}};
  std::vector<ComplexSparseMatrix> mats{ComplexSparseMatrix::from_triplets(4, a),
                                        ComplexSparseMatrix::from_triplets(4, b)};
  const SparsityPattern p = SparsityPattern::union_of(mats);
  CHECK(p.num_edges() == 2);
  CHECK(p.has_edge(0, 1));
  CHECK(p.has_edge(2, 3));

  std::vector<Triplet> d{{0, 0, {1, 0}}, {3, 3, {2, 0}}};
  std::vector<ComplexSparseMatrix> diag{ComplexSparseMatrix::from_triplets(4, d)};
  CHECK(SparsityPattern::union_of(diag).num_edges() == 0);

  std::vector<ComplexSparseMatrix> bad{ComplexSparseMatrix::from_triplets(4, a),
                                       ComplexSparseMatrix::from_triplets(3, {})};
  CHECK_THROWS_AS(SparsityPattern::union_of(bad), DimensionMismatch);
}

TEST_CASE("clique tree DOT dump mentions every clique") {
  const CliqueTree tree = build_clique_tree({{0, 1}, {1, 2}});
  const std::string dot = clique_tree_to_dot(tree);
  CHECK(dot.find("graph cliquetree") != std::string::npos);
  CHECK(dot.find("{0,1}") != std::string::npos);
  CHECK(dot.find("{1,2}") != std::string::npos);
}
