#include "opfsdr/complexmat.hpp"

#include <algorithm>

namespace opfsdr {

ComplexSparseMatrix ComplexSparseMatrix::from_triplets(int order,
                                                       std::vector<Triplet> triplets) {
  for (const Triplet& t : triplets) {
    if (t.row < 0 || t.row >= order || t.col < 0 || t.col >= order) {
      throw DimensionMismatch("triplet index out of range");
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  ComplexSparseMatrix m(order);
  m.entries_.reserve(triplets.size());
  for (const Triplet& t : triplets) {
    if (!m.entries_.empty() && m.entries_.back().row == t.row &&
        m.entries_.back().col == t.col) {
      m.entries_.back().value += t.value;
    } else {
      m.entries_.push_back(t);
    }
  }
  std::erase_if(m.entries_, [](const Triplet& t) { return t.value == cplx(0.0, 0.0); });
  return m;
}

cplx ComplexSparseMatrix::at(int i, int j) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair<int, int>{i, j},
                             [](const Triplet& t, const std::pair<int, int>& key) {
                               return t.row != key.first ? t.row < key.first
                                                         : t.col < key.second;
                             });
  if (it != entries_.end() && it->row == i && it->col == j) return it->value;
  return {0.0, 0.0};
}

bool ComplexSparseMatrix::is_hermitian(double tol) const {
  for (const Triplet& t : entries_) {
    if (std::abs(at(t.col, t.row) - std::conj(t.value)) > tol) return false;
  }
  return true;
}

Eigen::MatrixXcd ComplexSparseMatrix::dense() const {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(order_, order_);
  for (const Triplet& t : entries_) d(t.row, t.col) += t.value;
  return d;
}

Eigen::VectorXcd ComplexSparseMatrix::multiply(const Eigen::VectorXcd& v) const {
  if (v.size() != order_) throw DimensionMismatch("multiply: vector length mismatch");
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(order_);
  for (const Triplet& t : entries_) y(t.row) += t.value * v(t.col);
  return y;
}

cplx ComplexSparseMatrix::quadratic_form(const Eigen::VectorXcd& v) const {
  if (v.size() != order_) throw DimensionMismatch("quadratic_form: vector length mismatch");
  cplx acc{0.0, 0.0};
  for (const Triplet& t : entries_) acc += std::conj(v(t.row)) * t.value * v(t.col);
  return acc;
}

ComplexSparseMatrix ComplexSparseMatrix::hermitian_transpose() const {
  std::vector<Triplet> out;
  out.reserve(entries_.size());
  for (const Triplet& t : entries_) out.push_back({t.col, t.row, std::conj(t.value)});
  return from_triplets(order_, std::move(out));
}

void hermitian_split(const ComplexSparseMatrix& m, ComplexSparseMatrix& herm,
                     ComplexSparseMatrix& skew) {
  // M = H + j*K with H, K Hermitian: H = (M + M^H)/2, K = -j/2 (M - M^H).
  std::vector<Triplet> h, k;
  const ComplexSparseMatrix mh = m.hermitian_transpose();
  for (const Triplet& t : m.entries()) {
    h.push_back({t.row, t.col, 0.5 * t.value});
    k.push_back({t.row, t.col, cplx(0.0, -0.5) * t.value});
  }
  for (const Triplet& t : mh.entries()) {
    h.push_back({t.row, t.col, 0.5 * t.value});
    k.push_back({t.row, t.col, cplx(0.0, 0.5) * t.value});
  }
  herm = ComplexSparseMatrix::from_triplets(m.order(), std::move(h));
  skew = ComplexSparseMatrix::from_triplets(m.order(), std::move(k));
}

}  // namespace opfsdr
