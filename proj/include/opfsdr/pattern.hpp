#pragma once

#include <span>
#include <vector>

#include "opfsdr/complexmat.hpp"

namespace opfsdr {

// Symmetric sparsity pattern: undirected graph on {0..n-1}, diagonal implicit,
// no self loops stored.
class SparsityPattern {
 public:
  SparsityPattern() = default;
  explicit SparsityPattern(int n) : adj_(n) {}

  int order() const { return static_cast<int>(adj_.size()); }
  void add_edge(int i, int j);
  bool has_edge(int i, int j) const;
  const std::vector<int>& neighbors(int i) const { return adj_[i]; }
  long num_edges() const;
  bool connected() const;

  // Off-diagonal structural union of the given matrices (equal orders).
  static SparsityPattern union_of(std::span<const ComplexSparseMatrix> matrices);

 private:
  std::vector<std::vector<int>> adj_;  // sorted, both directions
};

struct Embedding {
  SparsityPattern filled;            // chordal supergraph of the input
  std::vector<int> elimination;      // elimination[k] = vertex eliminated k-th;
                                     // a perfect elimination ordering of filled
};

// Chordal embedding via a fill-reducing ordering (approximate minimum degree
// by default, or a caller-supplied permutation) and symbolic elimination.
// The input pattern must be connected.
Embedding chordal_embedding(const SparsityPattern& pattern,
                            const std::vector<int>* permutation = nullptr);

// Fill-reducing ordering used by chordal_embedding.
std::vector<int> amd_ordering(const SparsityPattern& pattern);

// Maximum cardinality search ordering (returned in elimination order).
std::vector<int> mcs_order(const SparsityPattern& pattern);

// True iff `order` is a perfect elimination ordering of the pattern.
bool is_perfect_elimination(const SparsityPattern& pattern, const std::vector<int>& order);

// Chordality check via MCS + perfect elimination test.
bool verify_chordal(const SparsityPattern& pattern);

// Maximal cliques of a chordal pattern given a perfect elimination ordering
// (supernode representative detection). Throws NotChordal if the ordering is
// not a perfect elimination ordering. Cliques are sorted index sets.
std::vector<std::vector<int>> find_cliques(const SparsityPattern& pattern,
                                           const std::vector<int>& elimination);

}  // namespace opfsdr
