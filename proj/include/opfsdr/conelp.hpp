#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "opfsdr/complexmat.hpp"
#include "opfsdr/errors.hpp"

namespace opfsdr {

// Segment kinds of the variable vector, in the order they appear in z.
//   Free         - unrestricted scalars
//   NonNeg       - elementwise nonnegative scalars
//   Soc          - one second-order cone (t, u): t >= ||u||_2, size = dim
//   HermitianPsd - Hermitian PSD matrix of the given order, parametrized by
//                  raw entries: rows i = 0..p-1, diagonal X_ii first, then
//                  (Re X_ij, Im X_ij) for j = i+1..p-1
//   SymPsd       - real symmetric PSD matrix, svec parametrization: rows
//                  i = 0..p-1, diagonal Z_ii first, then sqrt(2) Z_ij for
//                  j = i+1..p-1
enum class SegmentKind { Free, NonNeg, Soc, HermitianPsd, SymPsd };

struct ConeSegment {
  SegmentKind kind;
  int size;  // scalar count for Free/NonNeg, cone dim for Soc, matrix order for *Psd

  int dim() const {
    switch (kind) {
      case SegmentKind::Free:
      case SegmentKind::NonNeg:
      case SegmentKind::Soc:
        return size;
      case SegmentKind::HermitianPsd:
        return size * size;
      case SegmentKind::SymPsd:
        return size * (size + 1) / 2;
    }
    return 0;
  }
  bool operator==(const ConeSegment&) const = default;
};

struct ConeSpec {
  std::vector<ConeSegment> segments;

  int dim() const;
  // Dimension excluding Free segments (conic coordinates only).
  int cone_dim() const;
  // Barrier degree: NonNeg scalars count 1 each, each Soc counts 1, each PSD
  // block counts its order.
  int barrier_degree() const;
  bool has_kind(SegmentKind kind) const;
  bool operator==(const ConeSpec&) const = default;
};

// One equality row, kept sparse: sum_i coeff_i z_i + constant = 0.
struct SparseRow {
  std::vector<std::pair<int, double>> coeffs;

  void add(int index, double value) {
    if (value != 0.0) coeffs.emplace_back(index, value);
  }
  // Sorts by index and merges duplicates.
  void canonicalize();
  double dot(const Eigen::VectorXd& z) const;
  double max_abs() const;
};

// Linear expression in the variable vector; used when assembling rows.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  static LinExpr variable(int index, double scale = 1.0) {
    LinExpr e;
    e.terms.emplace_back(index, scale);
    return e;
  }
  static LinExpr of(double value) {
    LinExpr e;
    e.constant = value;
    return e;
  }
};

// Cone linear program
//   minimize    h'z + objective_offset
//   subject to  A z + c = 0,  z in K
// where row i of A is rows[i] and K is described by cone.
struct ConeLP {
  Eigen::VectorXd h;
  std::vector<SparseRow> rows;
  Eigen::VectorXd c;
  ConeSpec cone;
  double objective_offset = 0.0;

  int dim() const { return static_cast<int>(h.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  // row := expr == 0, i.e. coefficients from expr.terms, c entry expr.constant.
  void add_row(const LinExpr& expr);
  // lhs == rhs
  void add_row(const LinExpr& lhs, const LinExpr& rhs);

  void canonicalize();
  // Throws DimensionMismatch on inconsistent sizes or out-of-range indices.
  void check_consistent() const;
};

// Offsets of the coordinates of one PSD segment (either kind).
class PsdLayout {
 public:
  PsdLayout(int base, int order, SegmentKind kind);

  int order() const { return order_; }
  int base() const { return base_; }

  // HermitianPsd accessors (raw-entry coordinates).
  int diag(int i) const;
  int re(int i, int j) const;  // requires i < j
  int im(int i, int j) const;  // requires i < j

  // SymPsd accessor (svec coordinate of entry (i, j), i <= j).
  int svec(int i, int j) const;

  Eigen::MatrixXcd unpack_hermitian(const Eigen::VectorXd& z) const;
  Eigen::MatrixXd unpack_symmetric(const Eigen::VectorXd& z) const;
  void pack_hermitian(const Eigen::MatrixXcd& x, Eigen::VectorXd& z) const;
  void pack_symmetric(const Eigen::MatrixXd& x, Eigen::VectorXd& z) const;

 private:
  int row_offset(int i) const;
  int base_;
  int order_;
  SegmentKind kind_;
};

// Layouts for all segments of a spec (base offsets in z).
std::vector<int> segment_offsets(const ConeSpec& spec);

// Scaling heuristic: every row k of (A | c) is divided by
// d_k = max(|c_k|, max_j |A_kj|) (d_k := 1 when that is zero), and h is
// normalized to unit Euclidean norm. Acts on constraint rows and the
// objective only; the primal feasible set is unchanged.
struct ScalingRecord {
  Eigen::VectorXd d;
  double h_norm = 1.0;
};

std::pair<ConeLP, ScalingRecord> scale_conelp(const ConeLP& lp);

// Debug JSON dump, schema documented in docs/conelp-format.md.
std::string conelp_to_json(const ConeLP& lp, int indent = 2);

}  // namespace opfsdr
