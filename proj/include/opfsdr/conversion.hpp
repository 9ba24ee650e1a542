#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "opfsdr/cliquetree.hpp"
#include "opfsdr/conelp.hpp"

namespace opfsdr {

enum class StrategyKind { Full, Band, Arrow, Sparse, Diagonal };

// Consistency strategy for the conversion. Band(rho = |eta|-1) is Full,
// Band(0) is Diagonal.
struct ConsistencyStrategy {
  StrategyKind kind = StrategyKind::Full;
  int rho = 0;  // used by Band and Arrow

  static ConsistencyStrategy full() { return {StrategyKind::Full, 0}; }
  static ConsistencyStrategy band(int rho) { return {StrategyKind::Band, rho}; }
  static ConsistencyStrategy arrow(int rho) { return {StrategyKind::Arrow, rho}; }
  static ConsistencyStrategy sparse() { return {StrategyKind::Sparse, 0}; }
  static ConsistencyStrategy diagonal() { return {StrategyKind::Diagonal, 0}; }

  std::string name() const;
};

// One retained coupling equality between clique `child` and its parent:
// entry (a, b) of the separator (local indices into the sorted separator,
// a <= b; global vertex ids ga <= gb), real or imaginary part.
struct ConsistencyConstraint {
  int child = 0;
  int parent = 0;
  int a = 0, b = 0;    // separator-local indices
  int ga = 0, gb = 0;  // global vertex indices
  bool imag = false;   // only for a != b
};

// Enumerates the consistency equalities kept by the strategy. Sparse needs
// the network edge pattern (StrategyError otherwise).
std::vector<ConsistencyConstraint> consistency_constraints(
    const CliqueTree& tree, const ConsistencyStrategy& strategy,
    const SparsityPattern* network_edges = nullptr);

// Closed-form count of the list above.
long consistency_count_closed_form(const CliqueTree& tree,
                                   const ConsistencyStrategy& strategy,
                                   const SparsityPattern* network_edges = nullptr);

// Consistency count of the conversion applied naively to the real embedding
// (order-2|eta| separators, symmetric): sum |eta|(2|eta| + 1).
long naive_real_consistency_count(const CliqueTree& tree);

// Assignment of matrix entries (i, j), i <= j, to the clique that owns them:
// the clique containing both endpoints with the lowest postorder index.
class EntryAssignment {
 public:
  EntryAssignment() = default;
  EntryAssignment(int order, const CliqueTree& tree);

  // Owner clique of entry (i, j); throws UncoveredEntry if no clique holds both.
  int owner(int i, int j) const;
  std::optional<int> try_owner(int i, int j) const;
  int order() const { return order_; }

 private:
  int order_ = 0;
  std::vector<std::vector<std::pair<int, int>>> membership_;  // per vertex: (post, clique)
};

struct RowTag {
  enum Kind { Original, Consistency } kind = Original;
  int original_row = -1;               // for Original
  ConsistencyConstraint consistency;   // for Consistency
};

struct CountReport {
  long original_rows = 0;     // r
  long consistency_rows = 0;  // s
  double ratio = 0.0;         // (r + s) / r
  std::vector<int> block_orders;
  long sum_block_squares = 0;  // sum |gamma_i|^2
};

// Block-diagonal conversion of a cone LP whose last segment is one Hermitian
// PSD block. The PSD segment is replaced by one Hermitian block per clique;
// rows are rewritten through the entry assignment and consistency equalities
// are appended.
struct ConvertedProblem {
  ConeLP problem;
  CliqueTree tree;
  ConsistencyStrategy strategy;
  EntryAssignment assignment;
  std::vector<RowTag> row_tags;
  std::vector<int> block_begin;  // coordinate base of each clique block
  int original_rows = 0;
  int original_order = 0;  // order of the unconverted PSD block

  PsdLayout block_layout(int k) const {
    return PsdLayout(block_begin[k], static_cast<int>(tree.cliques[k].size()),
                     SegmentKind::HermitianPsd);
  }
  CountReport count_report() const;
  std::string to_json(int indent = 2) const;  // debug dump with provenance tags
};

ConvertedProblem convert(const ConeLP& lp, const CliqueTree& tree,
                         const ConsistencyStrategy& strategy,
                         const SparsityPattern* network_edges = nullptr);

// Real embedding at the solver boundary: every Hermitian PSD block of order p
// becomes one real symmetric PSD block of order 2p holding
// Z = [[Re X, -Im X], [Im X, Re X]]; inner products are preserved exactly and
// the constraint count is unchanged.
ConeLP real_embedding(const ConeLP& lp);

// Value-level companion of real_embedding: maps a point of `lp` to the
// embedded problem's coordinates.
Eigen::VectorXd embed_point(const ConeLP& lp, const Eigen::VectorXd& z);

// Recovers the Hermitian blocks of `original` from a solution of
// real_embedding(original), applying the structure-restoring projection
// Re X = (Z11 + Z22)/2, Im X = (Z21 - Z12)/2.
std::vector<Eigen::MatrixXcd> extract_hermitian_blocks(const ConeLP& original,
                                                       const Eigen::VectorXd& embedded_z);

}  // namespace opfsdr
