#pragma once

#include <span>
#include <vector>

#include "mastereq/linalg.hpp"

namespace mastereq {

/// Small row-major dense matrix. Used for Hessenberg projections and for
/// reference computations in tests.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(Index nrows, Index ncols, double fill = 0.0);

  static DenseMatrix identity(Index n);

  Index rows() const { return nrows_; }
  Index cols() const { return ncols_; }

  double& operator()(Index i, Index j) { return data_[static_cast<std::size_t>(i * ncols_ + j)]; }
  double operator()(Index i, Index j) const {
    return data_[static_cast<std::size_t>(i * ncols_ + j)];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  /// Leading `n` x `m` block.
  DenseMatrix block(Index n, Index m) const;
  Vector column(Index j) const;
  Vector multiply(std::span<const double> x) const;

  double norm1() const;
  double max_abs() const;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double factor);

 private:
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double factor, DenseMatrix a);

/// Solves A X = B by LU with partial pivoting. Throws NumericalError for a
/// singular A.
DenseMatrix solve(DenseMatrix a, DenseMatrix b);

/// Default upper bound on the order accepted by dense_expm.
inline constexpr Index kDenseExpmDefaultMaxOrder = 64;

/// Matrix exponential by scaling and squaring with the degree 13 diagonal
/// Pade approximant (Higham 2005 coefficients).
///
/// Throws DimensionError when the order exceeds `max_order` and
/// NumericalError when the norm is not finite or the result overflows; the
/// message carries the offending 1-norm.
DenseMatrix dense_expm(const DenseMatrix& h, Index max_order = kDenseExpmDefaultMaxOrder);

}  // namespace mastereq
