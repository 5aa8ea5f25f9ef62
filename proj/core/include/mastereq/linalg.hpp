#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mastereq/error.hpp"

namespace mastereq {

using Index = std::int64_t;
using Vector = std::vector<double>;

class DenseMatrix;

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed sparse column matrix.
///
/// Entries within a column are sorted by row index and unique. Construction
/// from triplets sums duplicates and removes entries that end up exactly zero.
/// Instances are immutable once built and safe to share between threads.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(Index nrows, Index ncols);

  static SparseMatrix from_triplets(Index nrows, Index ncols, std::vector<Triplet> triplets);
  static SparseMatrix identity(Index n);
  static SparseMatrix from_dense(const DenseMatrix& dense);
  /// Adopts compressed arrays. Rows within each column must be strictly
  /// increasing.
  static SparseMatrix from_csc(Index nrows, Index ncols, std::vector<Index> col_ptr,
                               std::vector<Index> row_idx, std::vector<double> values);

  Index rows() const { return nrows_; }
  Index cols() const { return ncols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }
  bool square() const { return nrows_ == ncols_; }

  std::span<const Index> col_ptr() const { return col_ptr_; }
  std::span<const Index> row_idx() const { return row_idx_; }
  std::span<const double> values() const { return values_; }

  /// Entry (i, j), zero when not stored.
  double coeff(Index i, Index j) const;

  /// y = M x. `y` must not alias `x`.
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// y = M^T x.
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;

  SparseMatrix transpose() const;
  SparseMatrix scaled(double factor) const;
  Vector column_sums() const;
  double max_abs() const;
  /// Induced 1-norm (maximum absolute column sum).
  double norm1() const;
  DenseMatrix to_dense() const;

 private:
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<Index> col_ptr_{0};
  std::vector<Index> row_idx_;
  std::vector<double> values_;
};

struct ScaledMatrix {
  double coefficient;
  const SparseMatrix* matrix;
};

Vector spmv(const SparseMatrix& m, std::span<const double> x);

/// Sum of scaled matrices of identical shape. Entries that cancel to exactly
/// zero are dropped.
SparseMatrix linear_combination(std::span<const ScaledMatrix> terms);
SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b);
SparseMatrix operator-(const SparseMatrix& a, const SparseMatrix& b);
SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b);

/// [A, B] = AB - BA. Entries with magnitude below 1e-300 are dropped; no
/// relative threshold is applied so zero column sums survive structurally.
SparseMatrix commutator(const SparseMatrix& a, const SparseMatrix& b);

Vector column_sums(const SparseMatrix& m);

double norm1(std::span<const double> x);
double norm2(std::span<const double> x);
double norm_inf(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
/// Sum of entries with compensated (Neumaier) summation.
double accurate_sum(std::span<const double> x);

}  // namespace mastereq
