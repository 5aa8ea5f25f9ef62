#include "mastereq/dense.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace mastereq {

DenseMatrix::DenseMatrix(Index nrows, Index ncols, double fill)
    : nrows_(nrows), ncols_(ncols), data_(static_cast<std::size_t>(nrows * ncols), fill) {
  if (nrows < 0 || ncols < 0) throw DimensionError("dense matrix: negative dimension");
}

DenseMatrix DenseMatrix::identity(Index n) {
  DenseMatrix m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::block(Index n, Index m) const {
  if (n > nrows_ || m > ncols_) throw DimensionError("dense block larger than matrix");
  DenseMatrix b(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) b(i, j) = (*this)(i, j);
  return b;
}

Vector DenseMatrix::column(Index j) const {
  Vector c(static_cast<std::size_t>(nrows_));
  for (Index i = 0; i < nrows_; ++i) c[static_cast<std::size_t>(i)] = (*this)(i, j);
  return c;
}

Vector DenseMatrix::multiply(std::span<const double> x) const {
  if (static_cast<Index>(x.size()) != ncols_) throw DimensionError("dense matvec: size mismatch");
  Vector y(static_cast<std::size_t>(nrows_), 0.0);
  for (Index i = 0; i < nrows_; ++i) {
    double s = 0.0;
    for (Index j = 0; j < ncols_; ++j) s += (*this)(i, j) * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = s;
  }
  return y;
}

double DenseMatrix::norm1() const {
  double best = 0.0;
  for (Index j = 0; j < ncols_; ++j) {
    double s = 0.0;
    for (Index i = 0; i < nrows_; ++i) s += std::abs((*this)(i, j));
    best = std::max(best, s);
  }
  return best;
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  if (other.nrows_ != nrows_ || other.ncols_ != ncols_)
    throw DimensionError("dense add: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  if (other.nrows_ != nrows_ || other.ncols_ != ncols_)
    throw DimensionError("dense subtract: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double factor) {
  for (double& v : data_) v *= factor;
  return *this;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("dense product: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index k = 0; k < a.cols(); ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      for (Index j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double factor, DenseMatrix a) { return a *= factor; }

DenseMatrix solve(DenseMatrix a, DenseMatrix b) {
  const Index n = a.rows();
  if (a.cols() != n || b.rows() != n) throw DimensionError("solve: shape mismatch");
  const Index m = b.cols();
  for (Index k = 0; k < n; ++k) {
    Index pivot = k;
    for (Index i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(pivot, k))) pivot = i;
    if (a(pivot, k) == 0.0) throw NumericalError("solve: singular matrix");
    if (pivot != k) {
      for (Index j = 0; j < n; ++j) std::swap(a(k, j), a(pivot, j));
      for (Index j = 0; j < m; ++j) std::swap(b(k, j), b(pivot, j));
    }
    for (Index i = k + 1; i < n; ++i) {
      double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      for (Index j = 0; j < m; ++j) b(i, j) -= f * b(k, j);
    }
  }
  for (Index k = n - 1; k >= 0; --k) {
    for (Index j = 0; j < m; ++j) {
      double s = b(k, j);
      for (Index i = k + 1; i < n; ++i) s -= a(k, i) * b(i, j);
      b(k, j) = s / a(k, k);
    }
  }
  return b;
}

DenseMatrix dense_expm(const DenseMatrix& h, Index max_order) {
  const Index n = h.rows();
  if (h.cols() != n) throw DimensionError("dense_expm: matrix is not square");
  if (n > max_order) {
    std::ostringstream msg;
    msg << "dense_expm: order " << n << " exceeds configured maximum " << max_order;
    throw DimensionError(msg.str());
  }
  if (n == 0) return {};

  const double norm = h.norm1();
  if (!std::isfinite(norm)) {
    std::ostringstream msg;
    msg << "dense_expm: non-finite input, 1-norm = " << norm;
    throw NumericalError(msg.str());
  }

  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  int squarings = 0;
  if (norm > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
  DenseMatrix a = std::ldexp(1.0, -squarings) * h;

  const DenseMatrix id = DenseMatrix::identity(n);
  const DenseMatrix a2 = a * a;
  const DenseMatrix a4 = a2 * a2;
  const DenseMatrix a6 = a4 * a2;

  DenseMatrix u_inner = b[13] * a6 + b[11] * a4 + b[9] * a2;
  DenseMatrix u_outer = a6 * u_inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
  DenseMatrix u = a * u_outer;
  DenseMatrix v_inner = b[12] * a6 + b[10] * a4 + b[8] * a2;
  DenseMatrix v = a6 * v_inner + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

  DenseMatrix r = solve(v - u, v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;

  for (double x : r.data()) {
    if (!std::isfinite(x)) {
      std::ostringstream msg;
      msg << "dense_expm: overflow, input 1-norm = " << norm;
      throw NumericalError(msg.str());
    }
  }
  return r;
}

}  // namespace mastereq
