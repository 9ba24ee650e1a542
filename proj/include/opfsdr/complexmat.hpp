#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "opfsdr/errors.hpp"

namespace opfsdr {

using cplx = std::complex<double>;

struct Triplet {
  int row = 0;
  int col = 0;
  cplx value{0.0, 0.0};
};

// Sparse complex matrix in canonical coordinate form: entries sorted
// row-major, duplicates summed, exact zeros dropped.
class ComplexSparseMatrix {
 public:
  ComplexSparseMatrix() = default;
  explicit ComplexSparseMatrix(int order) : order_(order) {}

  static ComplexSparseMatrix from_triplets(int order, std::vector<Triplet> triplets);

  int order() const { return order_; }
  const std::vector<Triplet>& entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }

  // Value at (i, j); zero if the entry is not stored.
  cplx at(int i, int j) const;

  bool is_hermitian(double tol = 0.0) const;

  Eigen::MatrixXcd dense() const;

  // y = A v
  Eigen::VectorXcd multiply(const Eigen::VectorXcd& v) const;

  // v^H A v
  cplx quadratic_form(const Eigen::VectorXcd& v) const;

  ComplexSparseMatrix hermitian_transpose() const;

 private:
  int order_ = 0;
  std::vector<Triplet> entries_;
};

// Builds the Hermitian pair (T, Ttilde) with v^H T v + j v^H Ttilde v = v^H M v
// for an arbitrary square complex M.
void hermitian_split(const ComplexSparseMatrix& m, ComplexSparseMatrix& herm,
                     ComplexSparseMatrix& skew);

}  // namespace opfsdr
