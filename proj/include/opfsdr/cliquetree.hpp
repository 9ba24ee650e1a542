#pragma once

#include <string>
#include <vector>

#include "opfsdr/pattern.hpp"

namespace opfsdr {

// Rooted clique tree with the running intersection property. Cliques are
// sorted index sets; separators[j] = cliques[j] intersected with its parent.
struct CliqueTree {
  std::vector<std::vector<int>> cliques;
  std::vector<int> parent;                  // -1 for the root
  std::vector<std::vector<int>> separators; // empty for the root
  int root = 0;
  std::vector<int> postorder;               // children before parents
  std::vector<std::vector<int>> children;

  int size() const { return static_cast<int>(cliques.size()); }
  std::vector<int> supernode(int j) const;  // cliques[j] minus separators[j]
  int vertex_count() const;
};

// Maximum weight spanning tree of the clique intersection graph, rooted at
// the clique containing the highest vertex index. Deterministic tie-breaks.
CliqueTree build_clique_tree(std::vector<std::vector<int>> cliques);

// Greedy bottom-up amalgamation: in post order, clique j is merged into its
// parent k when
//   (|gamma_k| - |eta_j|)(|gamma_j| - |eta_j|) <= t_fill
//   or max(|gamma_j| - |eta_j|, |gamma_k| - |eta_k|) <= t_size.
// Single pass; each node is considered once against its current parent.
CliqueTree amalgamate(const CliqueTree& tree, int t_fill = 16, int t_size = 16);

// True iff for every vertex the cliques containing it form a connected subtree.
bool verify_running_intersection(const CliqueTree& tree);

// Graphviz dump of the tree (cliques as nodes, separators as edge labels).
std::string clique_tree_to_dot(const CliqueTree& tree);

// Convenience: embedding + cliques + tree for a connected pattern.
CliqueTree clique_tree_of(const Embedding& embedding);

}  // namespace opfsdr
