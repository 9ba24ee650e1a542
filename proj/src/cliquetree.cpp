#include "opfsdr/cliquetree.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace opfsdr {

namespace {

std::vector<int> sorted_intersection(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<int> sorted_union(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Fills parent/children/separators/postorder of a tree whose adjacency is
// given; root chosen as the clique containing the highest vertex.
void orient(CliqueTree& t, const std::vector<std::vector<int>>& adjacency) {
  const int m = t.size();
  int top_vertex = -1;
  for (const auto& c : t.cliques) {
    if (!c.empty()) top_vertex = std::max(top_vertex, c.back());
  }
  t.root = 0;
  for (int j = 0; j < m; ++j) {
    if (std::binary_search(t.cliques[j].begin(), t.cliques[j].end(), top_vertex)) {
      t.root = j;
      break;
    }
  }
  t.parent.assign(m, -1);
  t.children.assign(m, {});
  std::vector<char> seen(m, 0);
  std::vector<int> stack{t.root};
  seen[t.root] = 1;
  std::vector<int> preorder;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    preorder.push_back(v);
    for (int u : adjacency[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        t.parent[u] = v;
        t.children[v].push_back(u);
        stack.push_back(u);
      }
    }
  }
  for (auto& ch : t.children) std::sort(ch.begin(), ch.end());
  t.separators.assign(m, {});
  for (int j = 0; j < m; ++j) {
    if (t.parent[j] >= 0) {
      t.separators[j] = sorted_intersection(t.cliques[j], t.cliques[t.parent[j]]);
    }
  }
  // Iterative postorder, children visited in ascending index order.
  t.postorder.clear();
  t.postorder.reserve(m);
  std::vector<std::pair<int, std::size_t>> frame{{t.root, 0}};
  while (!frame.empty()) {
    auto& [node, next] = frame.back();
    if (next < t.children[node].size()) {
      frame.emplace_back(t.children[node][next++], 0);
    } else {
      t.postorder.push_back(node);
      frame.pop_back();
    }
  }
}

struct DisjointSet {
  std::vector<int> up;
  explicit DisjointSet(int n) : up(n) { std::iota(up.begin(), up.end(), 0); }
  int find(int v) { return up[v] == v ? v : up[v] = find(up[v]); }
  bool merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    up[b] = a;
    return true;
  }
};

}  // namespace

std::vector<int> CliqueTree::supernode(int j) const {
  std::vector<int> out;
  std::set_difference(cliques[j].begin(), cliques[j].end(), separators[j].begin(),
                      separators[j].end(), std::back_inserter(out));
  return out;
}

int CliqueTree::vertex_count() const {
  int top = -1;
  for (const auto& c : cliques) {
    if (!c.empty()) top = std::max(top, c.back());
  }
  return top + 1;
}

CliqueTree build_clique_tree(std::vector<std::vector<int>> cliques) {
  for (auto& c : cliques) std::sort(c.begin(), c.end());
  const int m = static_cast<int>(cliques.size());
  CliqueTree t;
  t.cliques = std::move(cliques);
  if (m == 0) throw ValidationError("empty clique list");

  struct Edge {
    int weight, i, j;
  };
  std::vector<Edge> edges;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const int w =
          static_cast<int>(sorted_intersection(t.cliques[i], t.cliques[j]).size());
      if (w > 0) edges.push_back({w, i, j});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  DisjointSet ds(m);
  std::vector<std::vector<int>> adjacency(m);
  int picked = 0;
  for (const Edge& e : edges) {
    if (ds.merge(e.i, e.j)) {
      adjacency[e.i].push_back(e.j);
      adjacency[e.j].push_back(e.i);
      ++picked;
    }
  }
  if (picked != m - 1) {
    throw ValidationError("clique intersection graph is disconnected");
  }
  for (auto& a : adjacency) std::sort(a.begin(), a.end());
  orient(t, adjacency);
  if (!verify_running_intersection(t)) {
    throw NotChordal("cliques do not admit a running-intersection tree");
  }
  return t;
}

CliqueTree amalgamate(const CliqueTree& tree, int t_fill, int t_size) {
  const int m = tree.size();
  std::vector<std::vector<int>> cliques = tree.cliques;
  std::vector<int> parent = tree.parent;
  std::vector<char> alive(m, 1);

  auto separator_size = [&](int j) -> int {
    if (parent[j] < 0) return 0;
    return static_cast<int>(sorted_intersection(cliques[j], cliques[parent[j]]).size());
  };

  for (int j : tree.postorder) {
    if (j == tree.root || !alive[j]) continue;
    // parent may itself have been merged upward
    int k = parent[j];
    while (!alive[k]) k = parent[k];
    parent[j] = k;
    const int gj = static_cast<int>(cliques[j].size());
    const int gk = static_cast<int>(cliques[k].size());
    const int eta_j = static_cast<int>(sorted_intersection(cliques[j], cliques[k]).size());
    const int eta_k = separator_size(k);
    const bool fill_ok = (gk - eta_j) * (gj - eta_j) <= t_fill;
    const bool size_ok = std::max(gj - eta_j, gk - eta_k) <= t_size;
    if (fill_ok || size_ok) {
      cliques[k] = sorted_union(cliques[k], cliques[j]);
      alive[j] = 0;
      parent[j] = k;  // forward pointer for descendants
    }
  }

  std::vector<int> remap(m, -1);
  std::vector<std::vector<int>> out_cliques;
  for (int j = 0; j < m; ++j) {
    if (alive[j]) {
      remap[j] = static_cast<int>(out_cliques.size());
      out_cliques.push_back(cliques[j]);
    }
  }
  const int mm = static_cast<int>(out_cliques.size());
  std::vector<std::vector<int>> adjacency(mm);
  for (int j = 0; j < m; ++j) {
    if (!alive[j] || j == tree.root) continue;
    int k = parent[j];
    while (!alive[k]) k = parent[k];
    adjacency[remap[j]].push_back(remap[k]);
    adjacency[remap[k]].push_back(remap[j]);
  }
  for (auto& a : adjacency) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  CliqueTree out;
  out.cliques = std::move(out_cliques);
  orient(out, adjacency);
  if (!verify_running_intersection(out)) {
    throw NotChordal("amalgamation broke the running intersection property");
  }
  return out;
}

bool verify_running_intersection(const CliqueTree& tree) {
  const int n = tree.vertex_count();
  const int m = tree.size();
  // For each vertex, the cliques containing it must induce a connected subtree:
  // count the containing cliques and the tree edges between them.
  std::vector<int> holders(n, 0), links(n, 0);
  for (int j = 0; j < m; ++j) {
    for (int v : tree.cliques[j]) ++holders[v];
    if (tree.parent[j] >= 0) {
      for (int v : tree.separators[j]) ++links[v];
    }
  }
  for (int v = 0; v < n; ++v) {
    if (holders[v] == 0) return false;       // vertex not covered
    if (links[v] != holders[v] - 1) return false;  // forest, connected iff edge count fits
  }
  return true;
}

std::string clique_tree_to_dot(const CliqueTree& tree) {
  std::ostringstream out;
  out << "graph cliquetree {\n  node [shape=box];\n";
  for (int j = 0; j < tree.size(); ++j) {
    out << "  c" << j << " [label=\"{";
    for (std::size_t i = 0; i < tree.cliques[j].size(); ++i) {
      if (i) out << ",";
      out << tree.cliques[j][i];
    }
    out << "}\"];\n";
  }
  for (int j = 0; j < tree.size(); ++j) {
    if (tree.parent[j] < 0) continue;
    out << "  c" << tree.parent[j] << " -- c" << j << " [label=\"";
    for (std::size_t i = 0; i < tree.separators[j].size(); ++i) {
      if (i) out << ",";
      out << tree.separators[j][i];
    }
    out << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

CliqueTree clique_tree_of(const Embedding& embedding) {
  return build_clique_tree(find_cliques(embedding.filled, embedding.elimination));
}

}  // namespace opfsdr
