#include "opfsdr/pattern.hpp"

#include <algorithm>
#include <numeric>

#if defined(OPFSDR_HAVE_AMD)
#include <suitesparse/amd.h>
#endif

namespace opfsdr {

void SparsityPattern::add_edge(int i, int j) {
  if (i == j) return;  // diagonal is implicit
  if (i < 0 || j < 0 || i >= order() || j >= order()) {
    throw DimensionMismatch("edge index out of range");
  }
  auto insert = [](std::vector<int>& list, int v) {
    auto it = std::lower_bound(list.begin(), list.end(), v);
    if (it == list.end() || *it != v) list.insert(it, v);
  };
  insert(adj_[i], j);
  insert(adj_[j], i);
}

bool SparsityPattern::has_edge(int i, int j) const {
  if (i == j) return false;
  const std::vector<int>& list = adj_[i];
  return std::binary_search(list.begin(), list.end(), j);
}

long SparsityPattern::num_edges() const {
  long total = 0;
  for (const auto& list : adj_) total += static_cast<long>(list.size());
  return total / 2;
}

bool SparsityPattern::connected() const {
  const int n = order();
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adj_[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count == n;
}

SparsityPattern SparsityPattern::union_of(std::span<const ComplexSparseMatrix> matrices) {
  if (matrices.empty()) return SparsityPattern(0);
  const int n = matrices.front().order();
  SparsityPattern p(n);
  for (const ComplexSparseMatrix& m : matrices) {
    if (m.order() != n) throw DimensionMismatch("pattern union: order mismatch");
    for (const Triplet& t : m.entries()) {
      if (t.row != t.col) p.add_edge(t.row, t.col);
    }
  }
  return p;
}

namespace {

// Minimum-degree ordering by elimination game; deterministic (lowest index
// breaks degree ties). Fallback when SuiteSparse AMD is not available.
std::vector<int> min_degree_ordering(const SparsityPattern& pattern) {
  const int n = pattern.order();
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) adj[i] = pattern.neighbors(i);
  std::vector<char> eliminated(n, 0);
  std::vector<int> order;
  order.reserve(n);
  auto degree = [&](int v) {
    int d = 0;
    for (int u : adj[v]) {
      if (!eliminated[u]) ++d;
    }
    return d;
  };
  for (int step = 0; step < n; ++step) {
    int best = -1, best_deg = n + 1;
    for (int v = 0; v < n; ++v) {
      if (eliminated[v]) continue;
      const int d = degree(v);
      if (d < best_deg) {
        best = v;
        best_deg = d;
      }
    }
    order.push_back(best);
    eliminated[best] = 1;
    std::vector<int> live;
    for (int u : adj[best]) {
      if (!eliminated[u]) live.push_back(u);
    }
    for (std::size_t a = 0; a < live.size(); ++a) {
      for (std::size_t b = a + 1; b < live.size(); ++b) {
        const int u = live[a], w = live[b];
        auto insert = [](std::vector<int>& list, int v) {
          auto it = std::lower_bound(list.begin(), list.end(), v);
          if (it == list.end() || *it != v) list.insert(it, v);
        };
        insert(adj[u], w);
        insert(adj[w], u);
      }
    }
  }
  return order;
}

}  // namespace

std::vector<int> amd_ordering(const SparsityPattern& pattern) {
  const int n = pattern.order();
#if defined(OPFSDR_HAVE_AMD)
  std::vector<int> ap(n + 1, 0), ai;
  for (int i = 0; i < n; ++i) {
    ap[i + 1] = ap[i] + static_cast<int>(pattern.neighbors(i).size());
    for (int j : pattern.neighbors(i)) ai.push_back(j);
  }
  std::vector<int> perm(n);
  const int status = amd_order(n, ap.data(), ai.data(), perm.data(), nullptr, nullptr);
  if (status == AMD_OK || status == AMD_OK_BUT_JUMBLED) return perm;
  return min_degree_ordering(pattern);
#else
  return min_degree_ordering(pattern);
#endif
}

Embedding chordal_embedding(const SparsityPattern& pattern,
                            const std::vector<int>* permutation) {
  const int n = pattern.order();
  std::vector<int> order;
  if (permutation != nullptr) {
    if (static_cast<int>(permutation->size()) != n) {
      throw DimensionMismatch("permutation length mismatch");
    }
    std::vector<char> seen(n, 0);
    for (int v : *permutation) {
      if (v < 0 || v >= n || seen[v]) throw ValidationError("invalid permutation");
      seen[v] = 1;
    }
    order = *permutation;
  } else {
    order = amd_ordering(pattern);
  }

  // Symbolic elimination along `order`, recording fill.
  std::vector<int> rank(n);
  for (int k = 0; k < n; ++k) rank[order[k]] = k;
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) adj[i] = pattern.neighbors(i);
  Embedding out;
  out.filled = pattern;
  out.elimination = order;
  auto insert = [](std::vector<int>& list, int v) {
    auto it = std::lower_bound(list.begin(), list.end(), v);
    if (it == list.end() || *it != v) {
      list.insert(it, v);
      return true;
    }
    return false;
  };
  for (int k = 0; k < n; ++k) {
    const int v = order[k];
    std::vector<int> higher;
    for (int u : adj[v]) {
      if (rank[u] > k) higher.push_back(u);
    }
    for (std::size_t a = 0; a < higher.size(); ++a) {
      for (std::size_t b = a + 1; b < higher.size(); ++b) {
        const int p = higher[a], q = higher[b];
        if (insert(adj[p], q)) {
          insert(adj[q], p);
          out.filled.add_edge(p, q);
        }
      }
    }
  }
  return out;
}

std::vector<int> mcs_order(const SparsityPattern& pattern) {
  const int n = pattern.order();
  std::vector<int> weight(n, 0);
  std::vector<char> visited(n, 0);
  std::vector<int> visit_order(n);
  // Select vertices in decreasing visit order; lowest index breaks ties.
  for (int step = n - 1; step >= 0; --step) {
    int best = -1, best_w = -1;
    for (int v = 0; v < n; ++v) {
      if (!visited[v] && weight[v] > best_w) {
        best = v;
        best_w = weight[v];
      }
    }
    visited[best] = 1;
    visit_order[step] = best;
    for (int u : pattern.neighbors(best)) {
      if (!visited[u]) ++weight[u];
    }
  }
  return visit_order;  // elimination order: reverse of MCS visit sequence
}

bool is_perfect_elimination(const SparsityPattern& pattern, const std::vector<int>& order) {
  const int n = pattern.order();
  std::vector<int> rank(n);
  for (int k = 0; k < n; ++k) rank[order[k]] = k;
  for (int k = 0; k < n; ++k) {
    const int v = order[k];
    // Higher-ordered neighborhood of v must be complete; it suffices to check
    // that the lowest higher neighbor is adjacent to all the others.
    int first = -1;
    std::vector<int> higher;
    for (int u : pattern.neighbors(v)) {
      if (rank[u] > k) {
        higher.push_back(u);
        if (first == -1 || rank[u] < rank[first]) first = u;
      }
    }
    for (int u : higher) {
      if (u != first && !pattern.has_edge(first, u)) return false;
    }
  }
  return true;
}

bool verify_chordal(const SparsityPattern& pattern) {
  return is_perfect_elimination(pattern, mcs_order(pattern));
}

std::vector<std::vector<int>> find_cliques(const SparsityPattern& pattern,
                                           const std::vector<int>& elimination) {
  const int n = pattern.order();
  if (!is_perfect_elimination(pattern, elimination)) {
    throw NotChordal("ordering is not a perfect elimination ordering");
  }
  std::vector<int> rank(n);
  for (int k = 0; k < n; ++k) rank[elimination[k]] = k;

  // Candidate clique of v: {v} + higher-ordered neighbors. It is maximal iff
  // no vertex u eliminated earlier has v as its first higher neighbor with
  // |madj(u)| = |madj(v)| + 1 (Pothen-Sun representative test).
  std::vector<int> madj_size(n, 0);
  std::vector<int> parent(n, -1);  // first higher neighbor in elimination order
  for (int k = 0; k < n; ++k) {
    const int v = elimination[k];
    int first = -1;
    int count = 0;
    for (int u : pattern.neighbors(v)) {
      if (rank[u] > k) {
        ++count;
        if (first == -1 || rank[u] < rank[first]) first = u;
      }
    }
    madj_size[v] = count;
    parent[v] = first;
  }
  std::vector<char> representative(n, 1);
  for (int v = 0; v < n; ++v) {
    if (parent[v] != -1 && madj_size[v] == madj_size[parent[v]] + 1) {
      representative[parent[v]] = 0;  // clique of parent contained in clique of v
    }
  }
  std::vector<std::vector<int>> cliques;
  for (int k = 0; k < n; ++k) {
    const int v = elimination[k];
    if (!representative[v]) continue;
    std::vector<int> clique{v};
    for (int u : pattern.neighbors(v)) {
      if (rank[u] > k) clique.push_back(u);
    }
    std::sort(clique.begin(), clique.end());
    cliques.push_back(std::move(clique));
  }
  std::sort(cliques.begin(), cliques.end());
  return cliques;
}

}  // namespace opfsdr
