#include "mastereq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mastereq/dense.hpp"

namespace mastereq {

namespace {

constexpr double kCommutatorDropTolerance = 1e-300;

void require(bool condition, const char* what) {
  if (!condition) throw DimensionError(what);
}

// Column-by-column accumulation with a dense scatter buffer. Every result
// column is emitted sorted.
class ColumnAccumulator {
 public:
  explicit ColumnAccumulator(Index nrows)
      : values_(static_cast<std::size_t>(nrows), 0.0),
        marker_(static_cast<std::size_t>(nrows), -1) {}

  void add(Index col, Index row, double value) {
    auto r = static_cast<std::size_t>(row);
    if (marker_[r] != col) {
      marker_[r] = col;
      values_[r] = value;
      pattern_.push_back(row);
    } else {
      values_[r] += value;
    }
  }

  void flush(std::vector<Index>& rows, std::vector<double>& vals, double drop_below) {
    std::sort(pattern_.begin(), pattern_.end());
    for (Index row : pattern_) {
      double v = values_[static_cast<std::size_t>(row)];
      if (std::abs(v) > drop_below) {
        rows.push_back(row);
        vals.push_back(v);
      }
    }
    pattern_.clear();
  }

 private:
  std::vector<double> values_;
  std::vector<Index> marker_;
  std::vector<Index> pattern_;
};

SparseMatrix multiply_impl(const SparseMatrix& a, const SparseMatrix& b, double drop_below) {
  require(a.cols() == b.rows(), "sparse product: inner dimensions differ");
  std::vector<Index> col_ptr{0};
  std::vector<Index> rows;
  std::vector<double> vals;
  col_ptr.reserve(static_cast<std::size_t>(b.cols()) + 1);
  ColumnAccumulator acc(a.rows());
  auto acp = a.col_ptr();
  auto ari = a.row_idx();
  auto av = a.values();
  auto bcp = b.col_ptr();
  auto bri = b.row_idx();
  auto bv = b.values();
  for (Index j = 0; j < b.cols(); ++j) {
    for (Index kb = bcp[j]; kb < bcp[j + 1]; ++kb) {
      Index k = bri[kb];
      double bkj = bv[kb];
      for (Index ka = acp[k]; ka < acp[k + 1]; ++ka) acc.add(j, ari[ka], av[ka] * bkj);
    }
    acc.flush(rows, vals, drop_below);
    col_ptr.push_back(static_cast<Index>(rows.size()));
  }
  return SparseMatrix::from_csc(a.rows(), b.cols(), std::move(col_ptr), std::move(rows),
                                std::move(vals));
}

}  // namespace

SparseMatrix::SparseMatrix(Index nrows, Index ncols)
    : nrows_(nrows), ncols_(ncols), col_ptr_(static_cast<std::size_t>(ncols) + 1, 0) {
  require(nrows >= 0 && ncols >= 0, "sparse matrix: negative dimension");
}

SparseMatrix SparseMatrix::from_triplets(Index nrows, Index ncols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols)
      throw DimensionError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                           ") outside " + std::to_string(nrows) + "x" + std::to_string(ncols));
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& x, const Triplet& y) {
    return x.col != y.col ? x.col < y.col : x.row < y.row;
  });
  SparseMatrix m(nrows, ncols);
  m.row_idx_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  std::size_t i = 0;
  for (Index j = 0; j < ncols; ++j) {
    while (i < triplets.size() && triplets[i].col == j) {
      Index row = triplets[i].row;
      double sum = 0.0;
      while (i < triplets.size() && triplets[i].col == j && triplets[i].row == row) {
        sum += triplets[i].value;
        ++i;
      }
      if (sum != 0.0) {
        m.row_idx_.push_back(row);
        m.values_.push_back(sum);
      }
    }
    m.col_ptr_[static_cast<std::size_t>(j) + 1] = static_cast<Index>(m.values_.size());
  }
  return m;
}

SparseMatrix SparseMatrix::identity(Index n) {
  std::vector<Index> col_ptr(static_cast<std::size_t>(n) + 1);
  std::iota(col_ptr.begin(), col_ptr.end(), Index{0});
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  return from_csc(n, n, std::move(col_ptr), std::move(rows),
                  std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& dense) {
  std::vector<Triplet> t;
  for (Index i = 0; i < dense.rows(); ++i)
    for (Index j = 0; j < dense.cols(); ++j)
      if (dense(i, j) != 0.0) t.push_back({i, j, dense(i, j)});
  return from_triplets(dense.rows(), dense.cols(), std::move(t));
}

SparseMatrix SparseMatrix::from_csc(Index nrows, Index ncols, std::vector<Index> col_ptr,
                                    std::vector<Index> row_idx, std::vector<double> values) {
  require(col_ptr.size() == static_cast<std::size_t>(ncols) + 1, "csc: col_ptr size");
  require(row_idx.size() == values.size(), "csc: row/value size mismatch");
  require(col_ptr.front() == 0 && col_ptr.back() == static_cast<Index>(values.size()),
          "csc: col_ptr bounds");
  SparseMatrix m;
  m.nrows_ = nrows;
  m.ncols_ = ncols;
  m.col_ptr_ = std::move(col_ptr);
  m.row_idx_ = std::move(row_idx);
  m.values_ = std::move(values);
  return m;
}

double SparseMatrix::coeff(Index i, Index j) const {
  auto begin = row_idx_.begin() + col_ptr_[static_cast<std::size_t>(j)];
  auto end = row_idx_.begin() + col_ptr_[static_cast<std::size_t>(j) + 1];
  auto it = std::lower_bound(begin, end, i);
  if (it == end || *it != i) return 0.0;
  return values_[static_cast<std::size_t>(it - row_idx_.begin())];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<Index>(x.size()) != ncols_ || static_cast<Index>(y.size()) != nrows_)
    throw DimensionError("spmv: matrix is " + std::to_string(nrows_) + "x" +
                         std::to_string(ncols_) + ", x has " + std::to_string(x.size()) +
                         ", y has " + std::to_string(y.size()));
  std::fill(y.begin(), y.end(), 0.0);
  for (Index j = 0; j < ncols_; ++j) {
    double xj = x[static_cast<std::size_t>(j)];
    if (xj == 0.0) continue;
    for (Index k = col_ptr_[static_cast<std::size_t>(j)];
         k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k)
      y[static_cast<std::size_t>(row_idx_[static_cast<std::size_t>(k)])] +=
          values_[static_cast<std::size_t>(k)] * xj;
  }
}

void SparseMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
  if (static_cast<Index>(x.size()) != nrows_ || static_cast<Index>(y.size()) != ncols_)
    throw DimensionError("spmv transpose: dimension mismatch");
  for (Index j = 0; j < ncols_; ++j) {
    double sum = 0.0;
    for (Index k = col_ptr_[static_cast<std::size_t>(j)];
         k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k)
      sum += values_[static_cast<std::size_t>(k)] *
             x[static_cast<std::size_t>(row_idx_[static_cast<std::size_t>(k)])];
    y[static_cast<std::size_t>(j)] = sum;
  }
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Index> counts(static_cast<std::size_t>(nrows_) + 1, 0);
  for (Index r : row_idx_) ++counts[static_cast<std::size_t>(r) + 1];
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  std::vector<Index> col_ptr = counts;
  std::vector<Index> rows(values_.size());
  std::vector<double> vals(values_.size());
  for (Index j = 0; j < ncols_; ++j) {
    for (Index k = col_ptr_[static_cast<std::size_t>(j)];
         k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k) {
      auto dst = static_cast<std::size_t>(counts[static_cast<std::size_t>(row_idx_[static_cast<std::size_t>(k)])]++);
      rows[dst] = j;
      vals[dst] = values_[static_cast<std::size_t>(k)];
    }
  }
  return from_csc(ncols_, nrows_, std::move(col_ptr), std::move(rows), std::move(vals));
}

SparseMatrix SparseMatrix::scaled(double factor) const {
  SparseMatrix m = *this;
  for (double& v : m.values_) v *= factor;
  return m;
}

Vector SparseMatrix::column_sums() const {
  Vector sums(static_cast<std::size_t>(ncols_), 0.0);
  for (Index j = 0; j < ncols_; ++j) {
    double s = 0.0;
    for (Index k = col_ptr_[static_cast<std::size_t>(j)];
         k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k)
      s += values_[static_cast<std::size_t>(k)];
    sums[static_cast<std::size_t>(j)] = s;
  }
  return sums;
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SparseMatrix::norm1() const {
  double best = 0.0;
  for (Index j = 0; j < ncols_; ++j) {
    double s = 0.0;
    for (Index k = col_ptr_[static_cast<std::size_t>(j)];
         k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k)
      s += std::abs(values_[static_cast<std::size_t>(k)]);
    best = std::max(best, s);
  }
  return best;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(nrows_, ncols_);
  for (Index j = 0; j < ncols_; ++j)
    for (Index k = col_ptr_[static_cast<std::size_t>(j)];
         k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k)
      d(row_idx_[static_cast<std::size_t>(k)], j) = values_[static_cast<std::size_t>(k)];
  return d;
}

Vector spmv(const SparseMatrix& m, std::span<const double> x) {
  Vector y(static_cast<std::size_t>(m.rows()));
  m.multiply(x, y);
  return y;
}

SparseMatrix linear_combination(std::span<const ScaledMatrix> terms) {
  if (terms.empty()) throw DimensionError("linear_combination: no terms");
  Index nrows = terms.front().matrix->rows();
  Index ncols = terms.front().matrix->cols();
  for (const auto& t : terms)
    require(t.matrix->rows() == nrows && t.matrix->cols() == ncols,
            "linear_combination: shape mismatch");
  std::vector<Index> col_ptr{0};
  std::vector<Index> rows;
  std::vector<double> vals;
  ColumnAccumulator acc(nrows);
  for (Index j = 0; j < ncols; ++j) {
    for (const auto& t : terms) {
      if (t.coefficient == 0.0) continue;
      auto cp = t.matrix->col_ptr();
      auto ri = t.matrix->row_idx();
      auto v = t.matrix->values();
      for (Index k = cp[j]; k < cp[j + 1]; ++k) acc.add(j, ri[k], t.coefficient * v[k]);
    }
    acc.flush(rows, vals, 0.0);
    col_ptr.push_back(static_cast<Index>(rows.size()));
  }
  return SparseMatrix::from_csc(nrows, ncols, std::move(col_ptr), std::move(rows),
                                std::move(vals));
}

SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b) {
  const ScaledMatrix terms[] = {{1.0, &a}, {1.0, &b}};
  return linear_combination(terms);
}

SparseMatrix operator-(const SparseMatrix& a, const SparseMatrix& b) {
  const ScaledMatrix terms[] = {{1.0, &a}, {-1.0, &b}};
  return linear_combination(terms);
}

SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b) {
  return multiply_impl(a, b, 0.0);
}

SparseMatrix commutator(const SparseMatrix& a, const SparseMatrix& b) {
  require(a.square() && b.square() && a.rows() == b.rows(),
          "commutator: operands must be square and of equal size");
  SparseMatrix ab = multiply_impl(a, b, 0.0);
  SparseMatrix ba = multiply_impl(b, a, 0.0);
  const ScaledMatrix terms[] = {{1.0, &ab}, {-1.0, &ba}};
  SparseMatrix c = linear_combination(terms);
  // Second pass drops denormal-scale residue.
  std::vector<Index> col_ptr{0};
  std::vector<Index> rows;
  std::vector<double> vals;
  auto cp = c.col_ptr();
  auto ri = c.row_idx();
  auto v = c.values();
  for (Index j = 0; j < c.cols(); ++j) {
    for (Index k = cp[j]; k < cp[j + 1]; ++k) {
      if (std::abs(v[k]) >= kCommutatorDropTolerance) {
        rows.push_back(ri[k]);
        vals.push_back(v[k]);
      }
    }
    col_ptr.push_back(static_cast<Index>(rows.size()));
  }
  return SparseMatrix::from_csc(c.rows(), c.cols(), std::move(col_ptr), std::move(rows),
                                std::move(vals));
}

Vector column_sums(const SparseMatrix& m) { return m.column_sums(); }

double norm1(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

double norm2(std::span<const double> x) {
  double scale = 0.0;
  double ssq = 1.0;
  for (double v : x) {
    if (v == 0.0) continue;
    double a = std::abs(v);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double accurate_sum(std::span<const double> x) {
  double sum = 0.0;
  double c = 0.0;
  for (double v : x) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      c += (sum - t) + v;
    else
      c += (v - t) + sum;
    sum = t;
  }
  return sum + c;
}

}  // namespace mastereq
